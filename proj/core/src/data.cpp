#include "vrgrad/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "vrgrad/rng.hpp"
#include "vrgrad/solver.hpp"

namespace vrgrad {

namespace {

bool parse_double(std::string_view token, double& out) {
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_int(std::string_view token, int& out) {
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

void append_number(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

Dataset parse_libsvm(std::istream& input) {
  Dataset data;
  std::string line;
  long line_no = 0;
  while (std::getline(input, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);

    std::string_view view(line);
    auto next_token = [&view]() {
      while (!view.empty() && (view.front() == ' ' || view.front() == '\t' || view.front() == '\r'))
        view.remove_prefix(1);
      std::size_t len = 0;
      while (len < view.size() && view[len] != ' ' && view[len] != '\t' && view[len] != '\r') ++len;
      const std::string_view token = view.substr(0, len);
      view.remove_prefix(len);
      return token;
    };

    const std::string_view label_token = next_token();
    if (label_token.empty()) continue;  // blank or comment-only line

    Dataset::Row row;
    double label;
    if (!parse_double(label_token, label))
      throw MalformedLineError(line_no, "label is not a number");
    for (;;) {
      const std::string_view token = next_token();
      if (token.empty()) break;
      const auto colon = token.find(':');
      if (colon == std::string_view::npos)
        throw MalformedLineError(line_no, "feature token has no ':'");
      int index;
      double value;
      if (!parse_int(token.substr(0, colon), index) || index < 1)
        throw MalformedLineError(line_no, "feature index is not a positive integer");
      if (!parse_double(token.substr(colon + 1), value))
        throw MalformedLineError(line_no, "feature value is not a number");
      if (!row.indices.empty() && index <= row.indices.back())
        throw MalformedLineError(line_no, "feature indices must be strictly increasing");
      row.indices.push_back(index);
      row.values.push_back(value);
      data.n_features = std::max(data.n_features, index);
    }
    data.rows.push_back(std::move(row));
    data.labels.push_back(label);
  }
  return data;
}

Dataset parse_libsvm(const std::string& text) {
  std::istringstream stream(text);
  return parse_libsvm(stream);
}

void serialize_libsvm(const Dataset& data, std::ostream& out) {
  std::string line;
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    line.clear();
    append_number(line, data.labels[r]);
    for (std::size_t k = 0; k < data.rows[r].indices.size(); ++k) {
      line += ' ';
      line += std::to_string(data.rows[r].indices[k]);
      line += ':';
      append_number(line, data.rows[r].values[k]);
    }
    line += '\n';
    out << line;
  }
}

std::string serialize_libsvm(const Dataset& data) {
  std::ostringstream out;
  serialize_libsvm(data, out);
  return out.str();
}

void export_csv(const Dataset& data, std::ostream& out) {
  out << "label,idx:val;idx:val\n";
  std::string line;
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    line.clear();
    append_number(line, data.labels[r]);
    line += ',';
    for (std::size_t k = 0; k < data.rows[r].indices.size(); ++k) {
      if (k > 0) line += ';';
      line += std::to_string(data.rows[r].indices[k]);
      line += ':';
      append_number(line, data.rows[r].values[k]);
    }
    line += '\n';
    out << line;
  }
}

DropResult drop_zero_columns(const Dataset& data) {
  std::vector<char> has_nonzero(static_cast<std::size_t>(data.n_features) + 1, 0);
  for (const auto& row : data.rows)
    for (std::size_t k = 0; k < row.indices.size(); ++k)
      if (row.values[k] != 0.0) has_nonzero[row.indices[k]] = 1;

  DropResult result;
  std::vector<int> remap(static_cast<std::size_t>(data.n_features) + 1, 0);
  int next = 0;
  for (int c = 1; c <= data.n_features; ++c) {
    if (has_nonzero[c]) {
      remap[c] = ++next;
    } else {
      result.dropped_columns.push_back(c);
    }
  }

  result.dataset.labels = data.labels;
  result.dataset.n_features = next;
  result.dataset.rows.reserve(data.rows.size());
  for (const auto& row : data.rows) {
    Dataset::Row out;
    for (std::size_t k = 0; k < row.indices.size(); ++k) {
      if (remap[row.indices[k]] != 0) {
        out.indices.push_back(remap[row.indices[k]]);
        out.values.push_back(row.values[k]);
      }
    }
    result.dataset.rows.push_back(std::move(out));
  }
  return result;
}

LeastSquaresProblem to_least_squares(const Dataset& data, double xi) {
  std::vector<SparseRow> rows(data.rows.size());
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    rows[r].values = data.rows[r].values;
    rows[r].indices.reserve(data.rows[r].indices.size());
    for (int idx : data.rows[r].indices) rows[r].indices.push_back(idx - 1);
  }
  Vector b = Eigen::Map<const Vector>(data.labels.data(), data.labels.size());
  return build_least_squares(std::move(rows), std::move(b), data.n_features, xi);
}

LeastSquaresProblem generate_1d_least_squares(int n, std::uint64_t seed) {
  if (n < 1) throw NonPositiveConstantError("need at least one example");
  Rng rng(seed);
  std::vector<SparseRow> rows(n);
  Vector b(n);
  double sum_ab = 0.0, sum_aa = 0.0;
  for (int i = 0; i < n; ++i) {
    double a = rng.next_normal();
    while (a == 0.0) a = rng.next_normal();
    b[i] = rng.next_normal();
    rows[i].indices = {0};
    rows[i].values = {a};
    sum_ab += a * b[i];
    sum_aa += a * a;
  }
  LeastSquaresProblem problem = build_least_squares(std::move(rows), std::move(b), 1, 0.0);
  Vector x_star(1);
  x_star[0] = sum_ab / sum_aa;
  problem.set_solution(std::move(x_star));
  return problem;
}

double solution_sparsity(const Vector& x) {
  const double scale = x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 1.0;
  int zeros = 0;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (std::abs(x[j]) < 1e-8 * scale) ++zeros;
  return static_cast<double>(zeros) / static_cast<double>(x.size());
}

double tune_l1_for_sparsity(const Dataset& data, double target_lo, double target_hi) {
  if (!(0.0 <= target_lo && target_lo <= target_hi && target_hi <= 1.0))
    throw NonPositiveConstantError("sparsity target range is invalid");
  const LeastSquaresProblem base = to_least_squares(data, 0.0);

  // Everything thresholds to zero once xi dominates the gradient at the
  // origin, so that is a safe upper bracket.
  Vector grad0 = base.full_gradient(Vector::Zero(base.dim()));
  double xi_hi = 1.01 * grad0.cwiseAbs().maxCoeff();
  double xi_lo = 0.0;

  auto sparsity_at = [&base](double xi) {
    const LeastSquaresProblem trial = base.with_l1(xi);
    return solution_sparsity(proximal_gradient_solve(trial, 1e-10));
  };

  for (int step = 0; step < 60; ++step) {
    const double xi = 0.5 * (xi_lo + xi_hi);
    const double sparsity = sparsity_at(xi);
    if (sparsity >= target_lo && sparsity <= target_hi) return xi;
    (sparsity < target_lo ? xi_lo : xi_hi) = xi;
  }
  throw UnattainableError("sparsity target range not reachable by bisection on the l1 weight");
}

}  // namespace vrgrad
