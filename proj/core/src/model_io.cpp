#include "sgain/model_io.hpp"

#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace sgain {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const toml::node* node, const std::string& key, const std::string& message) const {
    std::ostringstream os;
    os << source_;
    if (node != nullptr && node->source().begin) {
      os << ':' << node->source().begin.line << ':' << node->source().begin.column;
    }
    os << ": " << key << ": " << message;
    throw ModelParseError(os.str());
  }

  void only_keys(const toml::table& table, const std::string& where, const std::set<std::string>& allowed) const {
    for (const auto& [key, node] : table) {
      if (!allowed.contains(std::string(key.str()))) {
        fail(&node, where.empty() ? std::string(key.str()) : where + "." + std::string(key.str()), "unknown key");
      }
    }
  }

  Rational number(const toml::node& node, const std::string& key) const {
    if (const auto* i = node.as_integer()) return Rational(i->get());
    if (const auto* f = node.as_floating_point()) return rational_from_double(f->get());
    if (const auto* s = node.as_string()) {
      try {
        return parse_rational(s->get());
      } catch (const std::invalid_argument&) {
        fail(&node, key, "not a number: '" + s->get() + "'");
      }
    }
    fail(&node, key, "expected a number or a rational string such as \"1/3\"");
  }

  std::vector<Rational> numbers(const toml::node& node, const std::string& key) const {
    std::vector<Rational> out;
    if (const auto* arr = node.as_array()) {
      for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(number(*arr->get(i), key + "[" + std::to_string(i + 1) + "]"));
    } else {
      out.push_back(number(node, key));
    }
    return out;
  }

  const toml::table& table(const toml::table& parent, const std::string& key, const std::string& where) const {
    const auto* node = parent.get(key);
    if (node == nullptr) fail(&parent, where, "missing table [" + where + "]");
    const auto* t = node->as_table();
    if (t == nullptr) fail(node, where, "expected a table");
    return *t;
  }

  const toml::node& required(const toml::table& parent, const std::string& key, const std::string& where) const {
    const auto* node = parent.get(key);
    if (node == nullptr) fail(&parent, where, "missing key '" + key + "'");
    return *node;
  }

  std::string string(const toml::node& node, const std::string& key) const {
    const auto* s = node.as_string();
    if (s == nullptr) fail(&node, key, "expected a string");
    return s->get();
  }

  bool boolean(const toml::node& node, const std::string& key) const {
    const auto* b = node.as_boolean();
    if (b == nullptr) fail(&node, key, "expected true or false");
    return b->get();
  }

  template <typename Fn>
  auto wrap(const toml::node* node, const std::string& key, Fn&& fn) const {
    try {
      return fn();
    } catch (const ModelParseError&) {
      throw;
    } catch (const ModelError& e) {
      fail(node, key, e.what());
    }
  }

 private:
  std::string source_;
};

std::string row_col(int i, int j) { return "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]"; }

ModelSpec read(const toml::table& root, const Reader& r) {
  r.only_keys(root, "", {"meta", "linear", "noise", "feedback"});

  std::string name = "model";
  if (const auto* meta = root.get("meta")) {
    const auto* t = meta->as_table();
    if (t == nullptr) r.fail(meta, "meta", "expected a table");
    r.only_keys(*t, "meta", {"name"});
    if (const auto* n = t->get("name")) name = r.string(*n, "meta.name");
  }

  const auto& lin = r.table(root, "linear", "linear");
  r.only_keys(lin, "linear", {"dim", "structure", "A"});
  const auto& dim_node = r.required(lin, "dim", "linear.dim");
  const auto* dim_int = dim_node.as_integer();
  if (dim_int == nullptr || dim_int->get() < 1 || dim_int->get() > 64) {
    r.fail(&dim_node, "linear.dim", "expected an integer in [1, 64]");
  }
  const int dim = static_cast<int>(dim_int->get());
  Structure structure = Structure::general;
  if (const auto* s = lin.get("structure")) {
    structure = r.wrap(s, "linear.structure", [&] { return structure_from_string(r.string(*s, "linear.structure")); });
  }

  const auto& a_node = r.required(lin, "A", "linear.A");
  const auto* a_arr = a_node.as_array();
  if (a_arr == nullptr) r.fail(&a_node, "linear.A", "expected an array");
  std::vector<Rational> a;
  if (!a_arr->empty() && a_arr->get(0)->is_array()) {
    if (a_arr->size() != static_cast<std::size_t>(dim)) {
      r.fail(&a_node, "linear.A", "expected " + std::to_string(dim) + " rows, found " + std::to_string(a_arr->size()));
    }
    for (int i = 0; i < dim; ++i) {
      const auto* row = a_arr->get(static_cast<std::size_t>(i))->as_array();
      if (row == nullptr || row->size() != static_cast<std::size_t>(dim)) {
        r.fail(a_arr->get(static_cast<std::size_t>(i)), "linear.A row " + std::to_string(i + 1),
               "expected " + std::to_string(dim) + " entries");
      }
      for (int j = 0; j < dim; ++j) {
        a.push_back(r.number(*row->get(static_cast<std::size_t>(j)), "linear.A" + row_col(i, j)));
      }
    }
  } else {
    if (a_arr->size() != static_cast<std::size_t>(dim * dim)) {
      r.fail(&a_node, "linear.A", "expected " + std::to_string(dim * dim) + " row-major entries, found " +
                                      std::to_string(a_arr->size()));
    }
    for (int k = 0; k < dim * dim; ++k) {
      a.push_back(r.number(*a_arr->get(static_cast<std::size_t>(k)), "linear.A" + row_col(k / dim, k % dim)));
    }
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      const auto& v = a[static_cast<std::size_t>(i * dim + j)];
      if (i != j && v < 0) {
        r.fail(&a_node, "linear.A" + row_col(i, j),
               "A is not cooperative: A" + row_col(i, j) + " = " + to_fraction_string(v) + " < 0");
      }
    }
  }

  std::vector<std::vector<Rational>> noise;
  if (const auto* noise_node = root.get("noise")) {
    const auto* arr = noise_node->as_array();
    if (arr == nullptr || !arr->is_array_of_tables()) r.fail(noise_node, "noise", "expected [[noise]] tables");
    for (std::size_t k = 0; k < arr->size(); ++k) {
      const auto& t = *arr->get(k)->as_table();
      const std::string where = "noise[" + std::to_string(k + 1) + "]";
      r.only_keys(t, where, {"diag", "matrix"});
      const auto* diag = t.get("diag");
      const auto* matrix = t.get("matrix");
      if ((diag == nullptr) == (matrix == nullptr)) r.fail(&t, where, "give exactly one of 'diag' or 'matrix'");
      if (diag != nullptr) {
        auto d = r.numbers(*diag, where + ".diag");
        if (d.size() != static_cast<std::size_t>(dim)) {
          r.fail(diag, where + ".diag", "expected " + std::to_string(dim) + " entries");
        }
        noise.push_back(std::move(d));
        continue;
      }
      const auto* rows = matrix->as_array();
      if (rows == nullptr || rows->size() != static_cast<std::size_t>(dim)) {
        r.fail(matrix, where + ".matrix", "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
      }
      std::vector<Rational> d(static_cast<std::size_t>(dim));
      for (int i = 0; i < dim; ++i) {
        const auto* row = rows->get(static_cast<std::size_t>(i))->as_array();
        if (row == nullptr || row->size() != static_cast<std::size_t>(dim)) {
          r.fail(matrix, where + ".matrix", "expected " + std::to_string(dim) + " entries per row");
        }
        for (int j = 0; j < dim; ++j) {
          const auto v = r.number(*row->get(static_cast<std::size_t>(j)), where + ".matrix" + row_col(i, j));
          if (i == j) {
            d[static_cast<std::size_t>(i)] = v;
          } else if (v != 0) {
            r.fail(row->get(static_cast<std::size_t>(j)), where + ".matrix" + row_col(i, j),
                   "unsupported noise: only diagonal noise matrices are supported");
          }
        }
      }
      noise.push_back(std::move(d));
    }
  }

  auto linear = r.wrap(&lin, "linear", [&] { return LinearSystem::make(dim, a, noise, structure); });

  const auto& fb = r.table(root, "feedback", "feedback");
  r.only_keys(fb, "feedback", {"family", "params", "expressions", "monotonicity", "allows_zero", "sublinearity"});
  const auto& family_node = r.required(fb, "family", "feedback.family");
  const auto family =
      r.wrap(&family_node, "feedback.family", [&] { return family_from_string(r.string(family_node, "feedback.family")); });
  FeedbackParams params;
  if (const auto* p = fb.get("params")) {
    const auto* t = p->as_table();
    if (t == nullptr) r.fail(p, "feedback.params", "expected a table");
    for (const auto& [key, node] : *t) {
      const std::string k(key.str());
      params.numbers[k] = r.numbers(node, "feedback.params." + k);
    }
  }
  if (const auto* e = fb.get("expressions")) {
    const auto* arr = e->as_array();
    if (arr == nullptr) r.fail(e, "feedback.expressions", "expected an array of strings");
    for (std::size_t i = 0; i < arr->size(); ++i) {
      params.expressions.push_back(r.string(*arr->get(i), "feedback.expressions[" + std::to_string(i + 1) + "]"));
    }
  }
  if (const auto* m = fb.get("monotonicity")) {
    params.monotonicity =
        r.wrap(m, "feedback.monotonicity", [&] { return monotonicity_from_string(r.string(*m, "feedback.monotonicity")); });
  }
  if (const auto* z = fb.get("allows_zero")) params.allows_zero = r.boolean(*z, "feedback.allows_zero");
  if (const auto* s = fb.get("sublinearity")) {
    const auto* t = s->as_table();
    if (t == nullptr) r.fail(s, "feedback.sublinearity", "expected a table");
    r.only_keys(*t, "feedback.sublinearity", {"kind", "amount"});
    SublinearityShift shift;
    const auto& kind = r.required(*t, "kind", "feedback.sublinearity.kind");
    shift.kind = r.wrap(&kind, "feedback.sublinearity.kind",
                        [&] { return shift_kind_from_string(r.string(kind, "feedback.sublinearity.kind")); });
    if (const auto* amount = t->get("amount")) shift.amount = r.number(*amount, "feedback.sublinearity.amount");
    params.sublinearity = shift;
  }
  auto feedback = r.wrap(&fb, "feedback", [&] { return FeedbackSpec::make(family, dim, std::move(params)); });
  return r.wrap(&root, "model", [&] { return ModelSpec::make(name, std::move(linear), std::move(feedback)); });
}

// Integers as TOML integers, everything else as an exact "p/q" string.
void push_number(toml::array& arr, const Rational& q) {
  if (boost::multiprecision::denominator(q) == 1 && abs(q) < Rational(1LL << 53)) {
    arr.push_back(q.convert_to<long long>());
  } else {
    arr.push_back(to_fraction_string(q));
  }
}

toml::array number_array(const std::vector<Rational>& values) {
  toml::array arr;
  for (const auto& v : values) push_number(arr, v);
  return arr;
}

void insert_number(toml::table& t, const std::string& key, const std::vector<Rational>& values) {
  if (values.size() == 1) {
    toml::array tmp;
    push_number(tmp, values.front());
    t.insert(key, *tmp.get(0));
  } else {
    t.insert(key, number_array(values));
  }
}

}  // namespace

ModelSpec parse_model_string(const std::string& text, const std::string& source_name) {
  Reader reader(source_name);
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source_name << ':' << e.source().begin.line << ':' << e.source().begin.column << ": syntax error: "
       << e.description();
    throw ModelParseError(os.str());
  }
  return read(root, reader);
}

ModelSpec parse_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelParseError(path.string() + ": cannot open model file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_string(ss.str(), path.string());
}

std::string serialize_model(const ModelSpec& model) {
  const int dim = model.dim();
  toml::table root;
  root.insert("meta", toml::table{{"name", model.name}});

  toml::array rows;
  for (int i = 0; i < dim; ++i) {
    toml::array row;
    for (int j = 0; j < dim; ++j) push_number(row, model.linear.a_exact(i, j));
    rows.push_back(std::move(row));
  }
  toml::table lin;
  lin.insert("dim", dim);
  lin.insert("structure", to_string(model.linear.structure()));
  lin.insert("A", std::move(rows));
  root.insert("linear", std::move(lin));

  toml::array noise;
  for (int k = 0; k < model.linear.noise_count(); ++k) {
    std::vector<Rational> diag;
    for (int i = 0; i < dim; ++i) diag.push_back(model.linear.noise_exact(k, i));
    noise.push_back(toml::table{{"diag", number_array(diag)}});
  }
  if (!noise.empty()) root.insert("noise", std::move(noise));

  const auto& p = model.feedback.params();
  toml::table fb;
  fb.insert("family", to_string(model.feedback.family()));
  if (p.monotonicity) fb.insert("monotonicity", to_string(*p.monotonicity));
  if (p.allows_zero) fb.insert("allows_zero", *p.allows_zero);
  if (!p.expressions.empty()) {
    toml::array e;
    for (const auto& s : p.expressions) e.push_back(s);
    fb.insert("expressions", std::move(e));
  }
  toml::table params;
  for (const auto& [key, values] : p.numbers) insert_number(params, key, values);
  fb.insert("params", std::move(params));
  if (p.sublinearity) {
    toml::table s;
    s.insert("kind", to_string(p.sublinearity->kind));
    if (p.sublinearity->amount) insert_number(s, "amount", {*p.sublinearity->amount});
    fb.insert("sublinearity", std::move(s));
  }
  root.insert("feedback", std::move(fb));

  std::ostringstream os;
  os << root << '\n';
  return os.str();
}

}  // namespace sgain
