#pragma once

#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "verify.hpp"

namespace spectraldist::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---- JSON pointer -> line, recorded during a SAX pass

struct CountingIterator {
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  const char* p = nullptr;
  std::size_t* consumed = nullptr;

  reference operator*() const { return *p; }
  CountingIterator& operator++() {
    ++p;
    ++*consumed;
    return *this;
  }
  CountingIterator operator++(int) {
    auto t = *this;
    ++*this;
    return t;
  }
  bool operator==(const CountingIterator& o) const { return p == o.p; }
  bool operator!=(const CountingIterator& o) const { return p != o.p; }
};

class LineIndex : public nlohmann::json_sax<json> {
 public:
  explicit LineIndex(const std::string& text) : text_(text) {
    std::size_t consumed = 0;
    consumed_ = &consumed;
    CountingIterator b{text.data(), &consumed}, e{text.data() + text.size(), &consumed};
    json::sax_parse(b, e, this);
    consumed_ = nullptr;
  }

  int line(const std::string& path) const {
    std::string p = path;
    while (true) {
      auto it = lines_.find(p);
      if (it != lines_.end()) return it->second;
      if (p.empty()) return 1;
      p = p.substr(0, p.rfind('/'));
    }
  }

  bool null() override { return value(); }
  bool boolean(bool) override { return value(); }
  bool number_integer(number_integer_t) override { return value(); }
  bool number_unsigned(number_unsigned_t) override { return value(); }
  bool number_float(number_float_t, const string_t&) override { return value(); }
  bool string(string_t&) override { return value(); }
  bool binary(binary_t&) override { return value(); }
  bool start_object(std::size_t) override { return open(false); }
  bool start_array(std::size_t) override { return open(true); }
  bool key(string_t& k) override {
    frames_.back().key = escape(k);
    return true;
  }
  bool end_object() override { return close(); }
  bool end_array() override { return close(); }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override { return false; }

 private:
  struct Frame {
    bool array = false;
    std::string key;
    std::size_t index = 0;
  };

  static std::string escape(const std::string& k) {
    std::string o;
    for (char c : k) {
      if (c == '~') o += "~0";
      else if (c == '/') o += "~1";
      else o += c;
    }
    return o;
  }
  std::string here() const {
    std::string p;
    for (const auto& f : frames_) p += "/" + (f.array ? std::to_string(f.index) : f.key);
    return p;
  }
  int current_line() const {
    std::size_t end = *consumed_ > 0 ? *consumed_ - 1 : 0;
    end = std::min(end, text_.size());
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
  }
  void advance() {
    if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
  }
  bool value() {
    lines_.emplace(here(), current_line());
    advance();
    return true;
  }
  bool open(bool array) {
    lines_.emplace(here(), current_line());
    frames_.push_back({array, {}, 0});
    return true;
  }
  bool close() {
    frames_.pop_back();
    advance();
    return true;
  }

  const std::string& text_;
  std::size_t* consumed_ = nullptr;
  std::vector<Frame> frames_;
  std::map<std::string, int> lines_;
};

// ---- configuration

struct BumpSpec {
  double center = 0.0, radius = 0.0, coef = 1.0;
};

struct GridConfig {
  int x_resolution = 512;
  int quadrature_order = 16;
  std::vector<double> epsilon_ladder{1e-2, 1e-3, 1e-4};
};

struct Config {
  std::string source;
  std::string scenario;
  std::uint64_t seed = 1;
  int probes = 4;
  double cluster_tol = 1e-6;
  GridConfig grid;
  std::optional<Rect> scan_region;
  std::map<std::string, double> tolerances;
  std::optional<double> all_tolerance;
  std::optional<std::set<std::string>> checks;
  std::string output_dir = ".";

  MatrixC matrix;
  int truncation = 64;
  DomainG domain;
  ProfileP profile;
  std::vector<BumpSpec> g, h;
  double c = 2.0;
  std::optional<double> amplitude, target_c0;
  BumpShape shape;

  std::uint64_t text_hash = 0;
  double tol_scale = 1.0;
  int threads = 1;

  std::string hash() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "\nseed=%llu\ntol_scale=%.17g", static_cast<unsigned long long>(seed), tol_scale);
    return hex64(fnv1a(buf, text_hash));
  }
};

inline const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t{
      {"multiplicative", 1e-7},         {"completeness", 1e-8},
      {"intertwining", 1e-7},           {"resolvent_equation", 1e-5},
      {"unitary_fourier", 1e-6},        {"coarea", 1e-8},
      {"plemelj", 1e-6},                {"multop_multiplicative", 1e-12},
      {"krein_multiplicative", 1e-4},   {"krein_completeness", 1e-4},
      {"residue_contour", 1e-7},        {"eigenrelation_discrete", 1e-7},
      {"eigenrelation_kappa_H", 1e-4},  {"eigenrelation_H_kappa", 1e-4},
      {"orthogonality", 1e-4},          {"orthogonality_disjoint", 1e-5},
      {"cross_component", 1e-6},        {"jordan_relations", 1e-6},
      {"jordan_laurent", 1e-5},         {"krein_resolvent_equation", 1e-4},
  };
  return t;
}

inline double tolerance(const Config& c, const std::string& key) {
  double t = c.all_tolerance ? *c.all_tolerance : default_tolerances().at(key);
  if (auto it = c.tolerances.find(key); it != c.tolerances.end()) t = it->second;
  return t * c.tol_scale;
}

class Reader {
 public:
  Reader(const json& root, const LineIndex& idx, std::string source) : root_(root), idx_(idx), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(idx_.line(path)) + ": " + msg + " (at " + (path.empty() ? "/" : path) + ")");
  }

  const json& at(const std::string& path) const { return root_.at(json::json_pointer(path)); }
  bool has(const std::string& path) const { return root_.contains(json::json_pointer(path)); }

  void keys(const std::string& path, std::initializer_list<const char*> allowed) const {
    const json& j = object(path);
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok |= it.key() == a;
      if (!ok) fail(path + "/" + it.key(), "unknown key '" + it.key() + "'");
    }
  }

  const json& object(const std::string& path) const {
    const json& j = at(path);
    if (!j.is_object()) fail(path, "expected an object");
    return j;
  }
  const json& array(const std::string& path) const {
    const json& j = at(path);
    if (!j.is_array()) fail(path, "expected an array");
    return j;
  }
  double number(const std::string& path) const {
    const json& j = at(path);
    double v = 0.0;
    if (j.is_number()) v = j.get<double>();
    else if (j.is_string()) v = decimal(path, j.get<std::string>());
    else fail(path, "expected a number");
    if (!std::isfinite(v)) fail(path, "value must be finite");
    return v;
  }
  double decimal(const std::string& path, const std::string& s) const {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) fail(path, "'" + s + "' is not a decimal number");
    return v;
  }
  std::int64_t integer(const std::string& path, std::int64_t lo, std::int64_t hi) const {
    const json& j = at(path);
    if (!j.is_number_integer()) fail(path, "expected an integer");
    auto v = j.get<std::int64_t>();
    if (v < lo || v > hi) fail(path, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }
  std::string text(const std::string& path) const {
    const json& j = at(path);
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }
  double positive(const std::string& path) const {
    double v = number(path);
    if (!(v > 0.0)) fail(path, "value must be positive");
    return v;
  }
  // [re, im] pair or a real number
  cplx complex(const std::string& path) const {
    const json& j = at(path);
    if (j.is_array()) {
      if (j.size() != 2) fail(path, "complex entries are written [re, im]");
      return {number(path + "/0"), number(path + "/1")};
    }
    return number(path);
  }

 private:
  const json& root_;
  const LineIndex& idx_;
  std::string source_;
};

inline MatrixC read_matrix(const Reader& r, const std::string& path) {
  const json& rows = r.array(path);
  const std::size_t n = rows.size();
  if (n == 0 || n > 8) r.fail(path, "matrix must be square with 1 to 8 rows");
  MatrixC A(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string rp = path + "/" + std::to_string(i);
    if (r.array(rp).size() != n) r.fail(rp, "matrix must be square");
    for (std::size_t k = 0; k < n; ++k) A(i, k) = r.complex(rp + "/" + std::to_string(k));
  }
  return A;
}

inline DomainG read_domain(const Reader& r, const std::string& path) {
  DomainG G;
  const json& a = r.array(path);
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::string ip = path + "/" + std::to_string(i);
    if (r.array(ip).size() != 2) r.fail(ip, "intervals are written [\"a\", \"b\"]");
    Interval iv{r.number(ip + "/0"), r.number(ip + "/1")};
    if (!(iv.a < iv.b)) r.fail(ip, "interval needs a < b");
    for (std::size_t j = 0; j < G.intervals.size(); ++j)
      if (iv.a < G.intervals[j].b && G.intervals[j].a < iv.b)
        r.fail(ip, "interval overlaps interval " + std::to_string(j) + " of " + path);
    G.intervals.push_back(iv);
  }
  try {
    validate(G);
  } catch (const DomainError& e) {
    r.fail(path, e.what());
  }
  return G;
}

inline ProfileP read_profile(const Reader& r, const std::string& path) {
  ProfileP P;
  P.coeffs.clear();
  const json& a = r.array(path);
  if (a.size() < 2) r.fail(path, "profile needs at least the coefficients of 1 and y");
  for (std::size_t i = 0; i < a.size(); ++i) P.coeffs.push_back(r.number(path + "/" + std::to_string(i)));
  return P;
}

inline std::vector<BumpSpec> read_bumps(const Reader& r, const std::string& path) {
  std::vector<BumpSpec> v;
  const json& a = r.array(path);
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::string bp = path + "/" + std::to_string(i);
    r.keys(bp, {"center", "radius", "coef"});
    BumpSpec b{r.number(bp + "/center"), r.positive(bp + "/radius"), 1.0};
    if (r.has(bp + "/coef")) b.coef = r.number(bp + "/coef");
    v.push_back(b);
  }
  return v;
}

inline Perturbation build_perturbation(const std::vector<BumpSpec>& gs, const std::vector<BumpSpec>& hs) {
  auto sum_of = [](const std::vector<BumpSpec>& v) {
    TestFunction1D f;
    for (const auto& b : v) f = f + b.coef * make_bump(b.center, b.radius);
    return f;
  };
  return {sum_of(gs), sum_of(hs)};
}

inline Rect read_rect(const Reader& r, const std::string& path) {
  r.keys(path, {"re", "im"});
  for (const char* k : {"/re", "/im"})
    if (r.array(path + k).size() != 2) r.fail(path + k, "expected [lo, hi]");
  Rect R{r.number(path + "/re/0"), r.number(path + "/re/1"), r.number(path + "/im/0"), r.number(path + "/im/1")};
  if (R.empty()) r.fail(path, "scan region needs lo < hi on both axes");
  return R;
}

inline Config parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    std::string msg = e.what();
    auto p = msg.find("] ");
    throw ConfigError(source + ": " + (p == std::string::npos ? msg : msg.substr(p + 2)));
  }
  LineIndex idx(text);
  Reader r(root, idx, source);
  Config c;
  c.source = source;
  c.text_hash = fnv1a(text);
  if (!root.is_object()) r.fail("", "configuration must be a JSON object");
  r.keys("", {"scenario", "seed", "probes", "cluster_tol", "grid", "scan_region", "tolerances", "checks", "output", "matrix",
              "unitary", "multop", "krein", "example2", "$schema", "description"});
  if (!r.has("/scenario")) r.fail("", "missing 'scenario'");
  c.scenario = r.text("/scenario");
  static const std::set<std::string> names{"matrix", "unitary", "multop", "krein", "example2"};
  if (!names.count(c.scenario)) r.fail("/scenario", "unknown scenario '" + c.scenario + "'");
  if (r.has("/seed")) c.seed = static_cast<std::uint64_t>(r.integer("/seed", 0, std::numeric_limits<std::int64_t>::max()));
  if (r.has("/probes")) c.probes = static_cast<int>(r.integer("/probes", 1, 16));
  if (r.has("/cluster_tol")) c.cluster_tol = r.positive("/cluster_tol");
  if (r.has("/grid")) {
    r.keys("/grid", {"x_resolution", "quadrature_order", "epsilon_ladder"});
    if (r.has("/grid/x_resolution")) c.grid.x_resolution = static_cast<int>(r.integer("/grid/x_resolution", 2, 1 << 16));
    if (r.has("/grid/quadrature_order")) c.grid.quadrature_order = static_cast<int>(r.integer("/grid/quadrature_order", 4, 64));
    if (r.has("/grid/epsilon_ladder")) {
      const json& l = r.array("/grid/epsilon_ladder");
      if (l.size() < 2) r.fail("/grid/epsilon_ladder", "ladder needs at least two values");
      c.grid.epsilon_ladder.clear();
      for (std::size_t i = 0; i < l.size(); ++i) {
        std::string p = "/grid/epsilon_ladder/" + std::to_string(i);
        double e = r.positive(p);
        if (!c.grid.epsilon_ladder.empty() && !(e < c.grid.epsilon_ladder.back())) r.fail(p, "ladder must decrease");
        c.grid.epsilon_ladder.push_back(e);
      }
    }
  }
  if (r.has("/scan_region")) c.scan_region = read_rect(r, "/scan_region");
  if (r.has("/tolerances")) {
    const json& t = r.object("/tolerances");
    for (auto it = t.begin(); it != t.end(); ++it) {
      std::string p = "/tolerances/" + it.key();
      if (it.key() == "all") c.all_tolerance = r.positive(p);
      else if (default_tolerances().count(it.key())) c.tolerances[it.key()] = r.positive(p);
      else r.fail(p, "unknown tolerance '" + it.key() + "'");
    }
  }
  if (r.has("/checks")) {
    const json& a = r.array("/checks");
    std::set<std::string> s;
    static const std::set<std::string> groups{"multiplicative", "completeness", "intertwining", "resolvent_equation",
                                              "unitary_fourier", "coarea", "plemelj", "residues", "eigenrelation",
                                              "jordan", "orthogonality", "cross_component"};
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::string p = "/checks/" + std::to_string(i), g = r.text(p);
      if (!groups.count(g)) r.fail(p, "unknown check group '" + g + "'");
      s.insert(g);
    }
    c.checks = s;
  }
  if (r.has("/output")) {
    r.keys("/output", {"dir"});
    if (r.has("/output/dir")) c.output_dir = r.text("/output/dir");
  }

  const std::string s = "/" + c.scenario;
  if (!r.has(s)) r.fail("/scenario", "scenario '" + c.scenario + "' needs a '" + c.scenario + "' section");
  if (c.scenario == "matrix") {
    r.keys(s, {"entries"});
    c.matrix = read_matrix(r, s + "/entries");
  } else if (c.scenario == "unitary") {
    r.keys(s, {"entries", "truncation"});
    c.matrix = read_matrix(r, s + "/entries");
    const int n = static_cast<int>(c.matrix.rows());
    if ((c.matrix.adjoint() * c.matrix - MatrixC::Identity(n, n)).norm() >= 1e-10) r.fail(s + "/entries", "matrix is not unitary");
    if (r.has(s + "/truncation")) c.truncation = static_cast<int>(r.integer(s + "/truncation", 1, 4096));
  } else if (c.scenario == "multop" || c.scenario == "krein") {
    if (c.scenario == "multop") r.keys(s, {"domain", "profile"});
    else r.keys(s, {"domain", "profile", "g", "h"});
    c.domain = read_domain(r, s + "/domain");
    c.profile = r.has(s + "/profile") ? read_profile(r, s + "/profile") : ProfileP::identity();
    try {
      make_model(c.domain, c.profile);
    } catch (const DomainError& e) {
      r.fail(s + "/profile", e.what());
    }
    if (c.scenario == "krein") {
      for (const char* k : {"/g", "/h"})
        if (!r.has(s + k)) r.fail(s, std::string("missing '") + (k + 1) + "'");
      c.g = read_bumps(r, s + "/g");
      c.h = read_bumps(r, s + "/h");
      if (!c.scan_region) r.fail(s, "krein scenario needs a top-level scan_region");
      KreinModel K;
      try {
        K = make_krein(make_model(c.domain, c.profile), build_perturbation(c.g, c.h));
      } catch (const DomainError& e) {
        r.fail(s, e.what());
      }
      const Rect& q = *c.scan_region;
      for (const auto& sl : K.slit)
        if (q.y0 <= 0.0 && q.y1 >= 0.0 && q.x0 < sl.b && q.x1 > sl.a)
        {
          char buf[96];
          std::snprintf(buf, sizeof buf, "scan region crosses the slit [%.6g, %.6g]", sl.a, sl.b);
          r.fail("/scan_region", buf);
        }
    }
  } else {
    r.keys(s, {"c", "amplitude", "target_c0", "shape"});
    if (r.has(s + "/c")) c.c = r.number(s + "/c");
    if (!(c.c > 1.0)) r.fail(s + "/c", "two-slit model needs c > 1");
    if (r.has(s + "/amplitude") == r.has(s + "/target_c0")) r.fail(s, "give exactly one of 'amplitude' and 'target_c0'");
    if (r.has(s + "/amplitude")) c.amplitude = r.number(s + "/amplitude");
    if (r.has(s + "/target_c0")) {
      c.target_c0 = r.number(s + "/target_c0");
      if (!(*c.target_c0 < 1.0)) r.fail(s + "/target_c0", "C(0) can only be lowered below 1");
    }
    if (r.has(s + "/shape")) {
      r.keys(s + "/shape", {"center", "radius"});
      if (r.has(s + "/shape/center")) c.shape.center = r.number(s + "/shape/center");
      if (r.has(s + "/shape/radius")) c.shape.radius = r.positive(s + "/shape/radius");
    }
    if (c.shape.center - c.shape.radius <= 1.0 || c.shape.center + c.shape.radius >= c.c)
      r.fail(r.has(s + "/shape") ? s + "/shape" : s, "bump support must lie inside (1, c)");
  }
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open configuration");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

// ---- jobs

using Job = std::function<std::vector<CheckReport>()>;

// runs jobs on up to `threads` workers; results and the first error keep job order
inline std::vector<CheckReport> run_jobs(const std::vector<Job>& jobs, int threads) {
  std::vector<std::vector<CheckReport>> out(jobs.size());
  std::vector<std::exception_ptr> err(jobs.size());
  auto work = [&](std::size_t i) {
    try {
      out[i] = jobs[i]();
    } catch (...) {
      err[i] = std::current_exception();
    }
  };
  const std::size_t nt = std::min<std::size_t>(std::max(threads, 1), jobs.size());
  if (nt <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nt; ++t)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < jobs.size();) work(i);
      });
    for (auto& t : pool) t.join();
  }
  std::vector<CheckReport> all;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (err[i]) std::rethrow_exception(err[i]);
    all.insert(all.end(), out[i].begin(), out[i].end());
  }
  return all;
}

template <class F>
void parallel_rows(std::size_t n, int threads, F&& f) {
  std::vector<Job> jobs;
  const std::size_t nt = std::max(1, threads), chunk = (n + nt - 1) / nt;
  for (std::size_t s = 0; s < n; s += chunk)
    jobs.push_back([&, s] {
      for (std::size_t i = s; i < std::min(n, s + chunk); ++i) f(i);
      return std::vector<CheckReport>{};
    });
  run_jobs(jobs, threads);
}

// ---- results

struct Result {
  json eigenvalues = json::object();
  std::vector<std::string> header{"x", "C1", "C2"};
  std::vector<std::vector<double>> rows;
  std::vector<CheckReport> checks;
  json meta = json::object();
};

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json to_json(const MatrixC& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(to_json(m(i, k)));
    rows.push_back(row);
  }
  return rows;
}

inline json to_json(const CheckReport& r) {
  return {{"name", r.name},           {"passed", r.passed}, {"abs_err", r.abs_err}, {"rel_err", r.rel_err},
          {"tolerance", r.tolerance}, {"lhs", to_json(r.lhs)}, {"rhs", to_json(r.rhs)}};
}

inline bool wanted(const Config& c, const std::string& group) { return !c.checks || c.checks->count(group); }

// Hilbert-Schmidt norm of sum_i c_i |k_i><b_i| with bilinear bras
inline double hs_norm(const MultOpModel& m, const DyadSum& d) {
  cplx s = 0.0;
  for (const auto& x : d.terms)
    for (const auto& y : d.terms)
      s += x.coef * std::conj(y.coef) * pair_fn(m, conj_fn(y.ket), x.ket) * pair_fn(m, conj_fn(y.bra), x.bra);
  return std::sqrt(std::max(0.0, s.real()));
}

inline const char* axis_class(cplx z, double scale) {
  double t = 1e-9 * std::max(1.0, scale);
  if (std::abs(z.imag()) <= t) return "real";
  if (std::abs(z.real()) <= t) return "imaginary";
  return "complex";
}

// ---- matrix and unitary scenarios

inline Result run_matrix(const Config& c) {
  Result res;
  const MatrixC& A = c.matrix;
  JordanForm J = jordan_decompose(A, c.cluster_tol);
  json entries = json::array();
  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  cplx mean = 0.0;
  for (std::size_t i = 0; i < J.eigenvalues.size(); ++i) {
    cplx l = J.eigenvalues[i];
    mean += l / double(J.eigenvalues.size());
    lo_x = std::min(lo_x, l.real());
    hi_x = std::max(hi_x, l.real());
    lo_y = std::min(lo_y, l.imag());
    hi_y = std::max(hi_y, l.imag());
    entries.push_back({{"kind", J.nilpotency[i] > 1 ? "jordan_block" : "simple_pole"},
                       {"location", to_json(l)},
                       {"classification", axis_class(l, std::abs(l))},
                       {"multiplicity", J.multiplicities[i]},
                       {"nilpotency", J.nilpotency[i]},
                       {"residue_norm", J.projectors[i].norm()},
                       {"nilpotent_norm", J.nilpotents[i].norm()},
                       {"residue", to_json(J.projectors[i])}});
  }
  res.eigenvalues["entries"] = entries;
  double spread = 0.0;
  for (cplx l : J.eigenvalues) spread = std::max(spread, std::abs(l - mean));
  auto phi1 = make_product_bump(mean + cplx(0.13, -0.07), spread + 0.8, spread + 0.7);
  auto phi2 = make_product_bump(mean + cplx(0.15, 0.1), spread + 0.7, spread + 0.9);
  auto one = TestFunction2D(make_plateau(lo_x - 0.5, hi_x + 0.5, 0.3), make_plateau(lo_y - 0.5, hi_y + 0.5, 0.3));
  std::vector<Job> jobs;
  if (wanted(c, "multiplicative"))
    jobs.push_back([=] { return std::vector{check_multiplicative(J, phi1, phi2, tolerance(c, "multiplicative"))}; });
  if (wanted(c, "completeness"))
    jobs.push_back([=] { return std::vector{check_completeness(J, one, tolerance(c, "completeness"))}; });
  if (c.scenario == "unitary") {
    auto ring = make_product_bump(cplx(0.2, -0.1), 1.5, 1.4);
    if (wanted(c, "unitary_fourier"))
      jobs.push_back([=] { return std::vector{check_unitary(A, ring, c.truncation, tolerance(c, "unitary_fourier"))}; });
  } else {
    if (wanted(c, "intertwining"))
      jobs.push_back([=] { return std::vector{check_intertwining(A, J, phi1, tolerance(c, "intertwining"))}; });
    if (wanted(c, "resolvent_equation"))
      jobs.push_back([=] { return std::vector{check_resolvent_equation(J, phi1, phi2, tolerance(c, "resolvent_equation"))}; });
  }
  res.checks = run_jobs(jobs, c.threads);
  return res;
}

// ---- multiplication operator

inline MultOpModel configured_model(const Config& c, const DomainG& G, const ProfileP& P) {
  MultOpModel m = make_model(G, P);
  m.quad.order = m.pv.order = c.grid.quadrature_order;
  return m;
}

inline void density_rows(const Config& c, Result& res, std::size_t npairs, const std::vector<double>& xs,
                         const std::function<std::vector<double>(double)>& row) {
  for (std::size_t k = 0; k < npairs; ++k) {
    res.header.push_back("re_kappa_" + std::to_string(k + 1));
    res.header.push_back("im_kappa_" + std::to_string(k + 1));
  }
  res.rows.assign(xs.size(), {});
  parallel_rows(xs.size(), c.threads, [&](std::size_t i) { res.rows[i] = row(xs[i]); });
}

inline Result run_multop(const Config& c, bool density) {
  Result res;
  MultOpModel m = configured_model(c, c.domain, c.profile);
  res.eigenvalues["entries"] = json::array();
  auto probes = make_probes(m.G.intervals, c.seed, 2 * c.probes);
  auto pairs = probe_pairs(probes);
  if (density)
    density_rows(c, res, pairs.size(), x_grid(m, c.grid.x_resolution), [&](double x) {
      std::vector<double> r{x, 1.0, 0.0};
      for (const auto& [f1, f2] : pairs) {
        cplx v = bracket_delta(m, f1, f2, x);
        r.push_back(v.real());
        r.push_back(v.imag());
      }
      return r;
    });
  double lo = 1e300, hi = -1e300;
  for (const auto& pc : m.pieces) {
    lo = std::min(lo, pc.lo());
    hi = std::max(hi, pc.hi());
  }
  double w = hi - lo;
  std::vector<Job> jobs;
  if (wanted(c, "coarea"))
    jobs.push_back([=] {
      std::vector<CheckReport> v;
      for (const auto& p : probes) v.push_back(check_coarea(m, p.fn(), tolerance(c, "coarea")));
      return v;
    });
  if (wanted(c, "plemelj"))
    jobs.push_back([=] {
      auto xs = x_grid(m, 16);
      return std::vector{check_plemelj(m, pairs[0].first, pairs[0].second, xs, c.grid.epsilon_ladder, tolerance(c, "plemelj"))};
    });
  if (wanted(c, "multiplicative"))
    jobs.push_back([=] {
      auto r = check_multiplicative(m, make_bump(lo + 0.45 * w, 0.4 * w), make_bump(lo + 0.55 * w, 0.35 * w), pairs,
                                    tolerance(c, "multop_multiplicative"));
      return std::vector{r};
    });
  res.checks = run_jobs(jobs, c.threads);
  return res;
}

// ---- rank-one perturbation scenarios

inline double real_set_distance(const std::vector<Interval>& set, cplx z) {
  double d = 1e300;
  for (const auto& iv : set) {
    double x = std::clamp(z.real(), iv.a, iv.b);
    d = std::min(d, std::abs(z - cplx(x, 0.0)));
  }
  return d;
}

inline Result run_krein_checks(const Config& c, const KreinModel& K, const Rect& region, bool density, bool completeness_ok) {
  Result res;
  KreinSpectrum S = krein_spectrum(K, region);
  const auto& m = K.op;
  auto pairs = probe_pairs(make_probes(m.G.intervals, c.seed, 2 * c.probes));

  double scale = 0.0;
  for (const auto& pc : m.pieces) scale = std::max({scale, std::abs(pc.lo()), std::abs(pc.hi())});
  json entries = json::array();
  for (const auto& e : S.points) {
    json j{{"location", to_json(e.z0)}, {"classification", axis_class(e.z0, scale)}, {"c_prime", to_json(e.c_prime_at)}};
    if (e.kind == PointSpectrumEntry::Kind::SimplePole) {
      j["kind"] = "simple_pole";
      j["residue_norm"] = hs_norm(m, e.residue);
    } else {
      j["kind"] = "double_zero_jordan";
      j["p0_norm"] = hs_norm(m, e.p0);
      j["a_norm"] = hs_norm(m, e.a);
    }
    entries.push_back(j);
  }
  res.eigenvalues["entries"] = entries;
  res.eigenvalues["scan_region"] = {{"re", {region.x0, region.x1}}, {"im", {region.y0, region.y1}}};

  auto grid = x_grid(m, c.grid.x_resolution);
  StripReport strip = strip_check(K, grid);
  res.meta["strip"] = {{"min_abs_C", strip.min_abs}, {"argmin", strip.argmin}, {"ok", strip.ok}};
  if (!strip.ok) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", strip.min_abs);
    throw RegimeError(std::string("|C(x +- i0)| drops to ") + buf + " near " + format_point(strip.argmin), strip.argmin);
  }

  if (density)
    density_rows(c, res, pairs.size(), grid, [&](double x) {
      CBoundary cb = c_boundary(K, x);
      std::vector<double> r{x, cb.C1, cb.C2};
      for (const auto& [f1, f2] : pairs) {
        cplx v = kappa_bracket(K, x, f1, f2);
        r.push_back(v.real());
        r.push_back(v.imag());
      }
      return r;
    });

  std::vector<Job> jobs;
  std::vector<std::string> skipped;
  if (completeness_ok && wanted(c, "completeness"))
    jobs.push_back([&, pairs] { return std::vector{check_completeness(S, pairs, tolerance(c, "krein_completeness"))}; });
  else if (!completeness_ok)
    skipped.push_back("completeness");
  bool simple = false, jordan = false;
  for (const auto& e : S.points) (e.kind == PointSpectrumEntry::Kind::SimplePole ? simple : jordan) = true;
  if (simple && wanted(c, "residues"))
    jobs.push_back([&, pairs] { return std::vector{check_residues(S, pairs, tolerance(c, "residue_contour"))}; });
  if (simple && wanted(c, "eigenrelation"))
    jobs.push_back([&] { return std::vector{check_eigenrelation_discrete(S, tolerance(c, "eigenrelation_discrete"))}; });
  if (jordan && wanted(c, "jordan")) {
    jobs.push_back([&, pairs] { return check_jordan_relations(S, pairs, tolerance(c, "jordan_relations")); });
    jobs.push_back([&, pairs] { return std::vector{check_laurent(S, pairs, tolerance(c, "jordan_laurent"))}; });
  }

  if (!K.slit.empty()) {
    Interval s = K.slit.front();
    for (const auto& iv : K.slit)
      if (iv.b - iv.a > s.b - s.a) s = iv;
    double mid = 0.5 * (s.a + s.b), w = s.b - s.a;
    auto slit1 = make_product_bump(cplx(mid, 0.0), 0.3 * w, 0.4);
    auto slit2 = make_product_bump(cplx(mid + 0.05 * w, 0.0), 0.25 * w, 0.5);
    auto left = make_product_bump(cplx(s.a + 0.25 * w, 0.0), 0.15 * w, 0.4);
    auto right = make_product_bump(cplx(s.b - 0.25 * w, 0.0), 0.15 * w, 0.4);
    const auto& p0 = pairs.front();
    if (wanted(c, "orthogonality")) {
      jobs.push_back([&, slit1, p0] { return check_orthogonality(S, slit1, slit1, p0.first, p0.second, tolerance(c, "orthogonality")); });
      jobs.push_back([&, left, right, p0] {
        auto v = check_orthogonality(S, left, right, p0.first, p0.second, tolerance(c, "orthogonality_disjoint"));
        for (auto& r : v) r.name += "_disjoint";
        return v;
      });
    }
    std::vector<std::pair<Fn1, Fn1>> two(pairs.begin(), pairs.begin() + std::min<std::size_t>(2, pairs.size()));
    if (wanted(c, "multiplicative"))
      jobs.push_back([&, slit1, slit2, two] { return std::vector{check_multiplicative(S, slit1, slit2, two, tolerance(c, "krein_multiplicative"))}; });
    if (wanted(c, "eigenrelation"))
      jobs.push_back([&, slit1, p0] {
        auto v = check_eigenrelation(S, slit1, p0.first, p0.second, tolerance(c, "eigenrelation_kappa_H"));
        v[1].tolerance = tolerance(c, "eigenrelation_H_kappa");
        v[1].passed = v[1].abs_err <= v[1].tolerance || v[1].rel_err <= v[1].tolerance;
        return v;
      });
    auto ranges = p_ranges(m);
    if (!S.points.empty() && wanted(c, "cross_component")) {
      const auto& e = S.points.back();
      double d = real_set_distance(ranges, e.z0);
      for (const auto& o : S.points)
        if (&o != &e) d = std::min(d, std::abs(o.z0 - e.z0));
      double r = 0.3 * d;
      auto pole = make_product_bump(e.z0, r, r);
      jobs.push_back([&, pole, slit1, two] { return std::vector{check_cross_component(S, pole, slit1, two, tolerance(c, "cross_component"))}; });
    }
    if (wanted(c, "resolvent_equation")) {
      double yc = 0.5;
      for (const auto& e : S.points)
        if (std::abs(e.z0.imag()) > 1e-9) yc = std::min(yc, 0.5 * std::abs(e.z0.imag()));
      auto a1 = make_product_bump(cplx(mid, yc), 0.3 * w, 0.4 * yc), a2 = make_product_bump(cplx(mid + 0.1 * w, yc), 0.25 * w, 0.3 * yc);
      jobs.push_back([&, a1, a2, p0] {
        return std::vector{check_resolvent_equation(K, a1, a2, p0.first, p0.second, tolerance(c, "krein_resolvent_equation"))};
      });
    }
  }
  res.checks = run_jobs(jobs, c.threads);
  if (!skipped.empty()) res.meta["skipped"] = skipped;
  return res;
}

inline Result run_krein(const Config& c, bool density) {
  MultOpModel m = configured_model(c, c.domain, c.profile);
  KreinModel K = make_krein(m, build_perturbation(c.g, c.h));
  Result res = run_krein_checks(c, K, *c.scan_region, density, true);
  res.eigenvalues["c_at_zero"] = to_json(c_value(K, 0.0));
  return res;
}

inline Result run_example2(const Config& c, bool density) {
  double A = c.amplitude ? *c.amplitude : example2_amplitude(c.c, *c.target_c0, c.shape);
  Example2 e = example2_build(c.c, A, c.shape);
  e.model.op.quad.order = e.model.op.pv.order = c.grid.quadrature_order;
  Rect region = c.scan_region ? *c.scan_region : example2_scan_region(e);
  Result res = run_krein_checks(c, e.model, region, density, e.regime != Regime::Undetermined);
  res.eigenvalues["regime"] = regime_name(e.regime);
  res.eigenvalues["amplitude"] = A;
  res.eigenvalues["c_at_zero"] = e.c0;
  res.eigenvalues["c_at_one"] = e.c1;
  return res;
}

inline Result run_scenario(const Config& c, bool density) {
  if (c.scenario == "matrix" || c.scenario == "unitary") return run_matrix(c);
  if (c.scenario == "multop") return run_multop(c, density);
  if (c.scenario == "krein") return run_krein(c, density);
  return run_example2(c, density);
}

// ---- files

inline json header(const Config& c) {
  return {{"tool", "spectraldist"}, {"version", kVersion}, {"config_hash", c.hash()}, {"scenario", c.scenario}, {"seed", c.seed}};
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

inline std::string csv_text(const Config& c, const Result& r) {
  std::string s = "# spectraldist " + std::string(kVersion) + " config_hash=" + c.hash() + "\n";
  for (std::size_t i = 0; i < r.header.size(); ++i) s += (i ? "," : "") + r.header[i];
  s += "\n";
  char buf[32];
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.16e", row[i]);
      if (i) s += ",";
      s += buf;
    }
    s += "\n";
  }
  return s;
}

inline json report_json(const Config& c, const Result& r) {
  json j = header(c);
  bool ok = true;
  json checks = json::array();
  for (const auto& x : r.checks) {
    checks.push_back(to_json(x));
    ok &= x.passed;
  }
  j["passed"] = ok && !r.meta.contains("error");
  j["tol_scale"] = c.tol_scale;
  for (auto it = r.meta.begin(); it != r.meta.end(); ++it) j[it.key()] = it.value();
  j["checks"] = checks;
  return j;
}

inline bool all_passed(const Result& r) {
  for (const auto& x : r.checks)
    if (!x.passed) return false;
  return true;
}

inline void write_spectrum(const Config& c, const Result& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json ev = header(c);
  for (auto it = r.eigenvalues.begin(); it != r.eigenvalues.end(); ++it) ev[it.key()] = it.value();
  write_text(dir / "eigenvalues.json", ev.dump(2) + "\n");
  write_text(dir / "density.csv", csv_text(c, r));
  write_text(dir / "report.json", report_json(c, r).dump(2) + "\n");
}

inline void write_report(const Config& c, const Result& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", report_json(c, r).dump(2) + "\n");
}

}  // namespace spectraldist::cli
