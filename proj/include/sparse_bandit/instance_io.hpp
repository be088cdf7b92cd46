#pragma once

// Plain-text instance files. Reals are written with 17 significant digits,
// which round-trips IEEE doubles bit-exactly.
//
//   sparse-bandit-instance 1
//   k <int>
//   d <int>
//   s <int>
//   epsilon <real>
//   noise none | noise gaussian <scale>
//   seed <int>
//   hard <orthogonality> <target> <gap>     (optional, lower-bound instances)
//   features
//   <k lines, d reals each>
//   theta
//   <d reals>
//   misspec
//   <k reals>
//   end

#include "sparse_bandit/bandit_model.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sparse_bandit {

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// Parsed file contents before any invariant is enforced.
struct InstanceRecord {
  Index k = 0;
  Index d = 0;
  Index s = 0;
  double epsilon = 0.0;
  NoiseModel noise;
  std::optional<HardInstanceInfo> hard;
  Matrix features;
  Vector theta;
  Vector misspec;
};

inline InstanceRecord to_record(const BanditInstance& inst) {
  InstanceRecord rec;
  rec.k = inst.k();
  rec.d = inst.d();
  rec.s = inst.s();
  rec.epsilon = inst.epsilon();
  rec.noise = inst.noise();
  rec.hard = inst.hard_info();
  rec.features = inst.features().matrix();
  rec.theta = inst.theta_star().coords();
  rec.misspec = inst.misspec();
  return rec;
}

inline void write_record(std::ostream& out, const InstanceRecord& rec) {
  out << "sparse-bandit-instance 1\n";
  out << "k " << rec.k << "\n";
  out << "d " << rec.d << "\n";
  out << "s " << rec.s << "\n";
  out << "epsilon " << format_real(rec.epsilon) << "\n";
  if (rec.noise.kind == NoiseModel::Kind::kGaussian) {
    out << "noise gaussian " << format_real(rec.noise.scale) << "\n";
  } else {
    out << "noise none\n";
  }
  out << "seed " << rec.noise.seed << "\n";
  if (rec.hard) {
    out << "hard " << format_real(rec.hard->orthogonality) << " " << rec.hard->target << " "
        << format_real(rec.hard->gap) << "\n";
  }
  out << "features\n";
  for (Eigen::Index i = 0; i < rec.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < rec.features.cols(); ++j) {
      out << (j ? " " : "") << format_real(rec.features(i, j));
    }
    out << "\n";
  }
  out << "theta\n";
  for (Eigen::Index j = 0; j < rec.theta.size(); ++j) out << (j ? " " : "") << format_real(rec.theta(j));
  out << "\nmisspec\n";
  for (Eigen::Index i = 0; i < rec.misspec.size(); ++i) {
    out << (i ? " " : "") << format_real(rec.misspec(i));
  }
  out << "\nend\n";
}

inline void write_instance(std::ostream& out, const BanditInstance& inst) { write_record(out, to_record(inst)); }

namespace detail {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-empty line, or throws at EOF.
  std::string next(const char* expecting) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return line;
    }
    throw ParseError(line_no_ + 1, std::string("unexpected end of file, expecting ") + expecting);
  }
  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_real(std::string_view tok, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError(line, "invalid real '" + std::string(tok) + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(std::string_view tok, std::size_t line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError(line, "invalid integer '" + std::string(tok) + "'");
  }
  return v;
}

inline std::uint64_t keyed_uint(LineReader& r, std::string_view key) {
  const std::string line = r.next(std::string(key).c_str());
  const auto toks = split_ws(line);
  if (toks.size() != 2 || toks[0] != key) {
    throw ParseError(r.line_no(), "expected '" + std::string(key) + " <integer>'");
  }
  return parse_uint(toks[1], r.line_no());
}

inline Vector real_row(LineReader& r, Index expected, const char* what) {
  const std::string line = r.next(what);
  const auto toks = split_ws(line);
  if (toks.size() != expected) {
    throw ParseError(r.line_no(), std::string(what) + ": expected " + std::to_string(expected) +
                                      " values, found " + std::to_string(toks.size()));
  }
  Vector v(static_cast<Eigen::Index>(expected));
  for (Index j = 0; j < expected; ++j) v(static_cast<Eigen::Index>(j)) = parse_real(toks[j], r.line_no());
  return v;
}

inline void expect_keyword(LineReader& r, std::string_view keyword) {
  const std::string line = r.next(std::string(keyword).c_str());
  const auto toks = split_ws(line);
  if (toks.size() != 1 || toks[0] != keyword) {
    throw ParseError(r.line_no(), "expected '" + std::string(keyword) + "'");
  }
}

}  // namespace detail

inline InstanceRecord read_record(std::istream& in) {
  detail::LineReader r(in);
  {
    const std::string line = r.next("header");
    if (line != "sparse-bandit-instance 1") throw ParseError(r.line_no(), "missing 'sparse-bandit-instance 1' header");
  }
  InstanceRecord rec;
  rec.k = detail::keyed_uint(r, "k");
  rec.d = detail::keyed_uint(r, "d");
  rec.s = detail::keyed_uint(r, "s");
  {
    const std::string line = r.next("epsilon");
    const auto toks = detail::split_ws(line);
    if (toks.size() != 2 || toks[0] != "epsilon") throw ParseError(r.line_no(), "expected 'epsilon <real>'");
    rec.epsilon = detail::parse_real(toks[1], r.line_no());
  }
  {
    const std::string line = r.next("noise");
    const auto toks = detail::split_ws(line);
    if (toks.size() < 2 || toks[0] != "noise") throw ParseError(r.line_no(), "expected 'noise none|gaussian <scale>'");
    if (toks[1] == "none" && toks.size() == 2) {
      rec.noise.kind = NoiseModel::Kind::kNone;
    } else if (toks[1] == "gaussian" && toks.size() == 3) {
      rec.noise.kind = NoiseModel::Kind::kGaussian;
      rec.noise.scale = detail::parse_real(toks[2], r.line_no());
    } else {
      throw ParseError(r.line_no(), "expected 'noise none' or 'noise gaussian <scale>'");
    }
  }
  rec.noise.seed = detail::keyed_uint(r, "seed");
  if (rec.k == 0 || rec.d == 0) throw ParseError(r.line_no(), "k and d must be positive");

  std::string line = r.next("features");
  auto toks = detail::split_ws(line);
  if (!toks.empty() && toks[0] == "hard") {
    if (toks.size() != 4) throw ParseError(r.line_no(), "expected 'hard <orthogonality> <target> <gap>'");
    HardInstanceInfo info;
    info.orthogonality = detail::parse_real(toks[1], r.line_no());
    info.target = detail::parse_uint(toks[2], r.line_no());
    info.gap = detail::parse_real(toks[3], r.line_no());
    rec.hard = info;
    line = r.next("features");
    toks = detail::split_ws(line);
  }
  if (toks.size() != 1 || toks[0] != "features") throw ParseError(r.line_no(), "expected 'features'");
  rec.features.resize(static_cast<Eigen::Index>(rec.k), static_cast<Eigen::Index>(rec.d));
  for (Index i = 0; i < rec.k; ++i) {
    rec.features.row(static_cast<Eigen::Index>(i)) = detail::real_row(r, rec.d, "feature row").transpose();
  }
  detail::expect_keyword(r, "theta");
  rec.theta = detail::real_row(r, rec.d, "theta");
  detail::expect_keyword(r, "misspec");
  rec.misspec = detail::real_row(r, rec.k, "misspec");
  detail::expect_keyword(r, "end");
  return rec;
}

/// Builds an instance from a record, enforcing every model invariant.
inline BanditInstance to_instance(const InstanceRecord& rec) {
  const NormCheck check = rec.hard ? NormCheck::kSkip : NormCheck::kEnforce;
  return build_instance(FeatureMatrix(rec.features), SparseParameter(rec.theta, rec.s, check), rec.misspec,
                        rec.epsilon, rec.noise, rec.hard);
}

inline BanditInstance read_instance(std::istream& in) { return to_instance(read_record(in)); }

inline void save_instance(const std::string& path, const BanditInstance& inst) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_instance(out, inst);
}

inline BanditInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_instance(in);
}

struct InvariantFailure {
  std::string invariant;
  std::string detail;
};

struct ValidationReport {
  std::vector<InvariantFailure> failures;
  std::size_t pairs_checked = 0;  // orthogonality scan size for lower-bound files
  bool ok() const { return failures.empty(); }
};

/// Re-checks every model invariant on a parsed record, collecting all
/// failures instead of stopping at the first. Lower-bound files additionally
/// get the exhaustive pairwise orthogonality scan.
inline ValidationReport check_record(const InstanceRecord& rec) {
  ValidationReport rep;
  auto fail = [&](std::string inv, std::string detail) { rep.failures.push_back({std::move(inv), std::move(detail)}); };
  if (!(rec.epsilon > 0.0)) fail("epsilon positive", "epsilon = " + format_real(rec.epsilon));
  for (Eigen::Index i = 0; i < rec.features.rows(); ++i) {
    const double n = rec.features.row(i).norm();
    if (!(n <= 1.0 + kNormTolerance)) fail("feature row norm", "row " + std::to_string(i) + " norm " + format_real(n));
  }
  Index nnz = 0;
  for (Eigen::Index j = 0; j < rec.theta.size(); ++j) nnz += rec.theta(j) != 0.0;
  if (nnz != rec.s) fail("theta sparsity", "||theta||_0 = " + std::to_string(nnz) + ", s = " + std::to_string(rec.s));
  if (!rec.hard && !(rec.theta.norm() <= 1.0 + kNormTolerance)) {
    fail("theta norm", "||theta||_2 = " + format_real(rec.theta.norm()));
  }
  for (Eigen::Index i = 0; i < rec.misspec.size(); ++i) {
    if (!(std::abs(rec.misspec(i)) <= rec.epsilon)) {
      fail("misspecification exceeds epsilon", "nu[" + std::to_string(i) + "] = " + format_real(rec.misspec(i)));
    }
  }
  if (rec.hard) {
    const auto& info = *rec.hard;
    if (info.target >= rec.k) fail("hard target index", "target out of range");
    for (Eigen::Index i = 0; i < rec.features.rows(); ++i) {
      if (std::abs(rec.features.row(i).norm() - 1.0) > kNormTolerance) {
        fail("hard row unit norm", "row " + std::to_string(i));
      }
      for (Eigen::Index j = i + 1; j < rec.features.rows(); ++j) {
        ++rep.pairs_checked;
        const double ip = rec.features.row(i).dot(rec.features.row(j));
        if (!(std::abs(ip) <= info.orthogonality)) {
          fail("pairwise orthogonality",
               "rows " + std::to_string(i) + "," + std::to_string(j) + " inner product " + format_real(ip));
        }
      }
    }
  }
  return rep;
}

inline ValidationReport validate_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return check_record(read_record(in));
}

}  // namespace sparse_bandit
