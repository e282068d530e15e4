#include "logitdiff/quality/frechet.hpp"

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <sstream>

#include "logitdiff/core/error.hpp"
#include "logitdiff/core/hash.hpp"
#include "logitdiff/core/io.hpp"

namespace logitdiff::quality {
namespace {

constexpr double kEigenFloor = -1e-6;

Eigen::MatrixXd to_matrix(const EmbeddingStats& s) {
  const auto d = static_cast<Eigen::Index>(s.dim());
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = s.sigma[static_cast<std::size_t>(i * d + j)];
  }
  return m;
}

Eigen::VectorXd clamped_eigenvalues(const Eigen::VectorXd& values, const char* what) {
  Eigen::VectorXd out = values;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out(i) < kEigenFloor) {
      fail(ErrorCode::numerical_failure,
           fmt::format("{} has eigenvalue {} below {} (index {} of {})", what, out(i), kEigenFloor, i, out.size()));
    }
    if (out(i) < 0.0) out(i) = 0.0;
  }
  return out;
}

double sample_mean(std::span<const double> xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

void check_plddt(std::span<const double> xs, const char* which) {
  if (xs.empty()) fail(ErrorCode::invalid_input, fmt::format("{} pLDDT list is empty", which));
  for (double x : xs) {
    if (!(x >= 0.0 && x <= 100.0)) {
      fail(ErrorCode::invalid_input, fmt::format("{} pLDDT value {} outside [0, 100]", which, x));
    }
  }
}

std::vector<double> parse_numbers(std::istringstream& line, std::size_t count, std::string_view what) {
  std::vector<double> out;
  out.reserve(count);
  std::string token;
  while (line >> token) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
      fail(ErrorCode::format, fmt::format("bad number '{}' in stats {}", token, what));
    }
    out.push_back(v);
  }
  if (out.size() != count) fail(ErrorCode::format, fmt::format("stats {} expects {} values", what, count));
  return out;
}

}  // namespace

void EmbeddingStats::validate() const {
  const std::size_t d = mu.size();
  if (d == 0) fail(ErrorCode::invalid_input, "embedding stats have dimension zero");
  if (sigma.size() != d * d) fail(ErrorCode::invalid_input, "covariance shape does not match the mean");
  if (n < 2) fail(ErrorCode::insufficient_samples, "embedding stats need at least two samples");
  for (double v : mu) {
    if (!std::isfinite(v)) fail(ErrorCode::invalid_input, "non-finite mean entry");
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(at(i, j))) fail(ErrorCode::invalid_input, "non-finite covariance entry");
      if (std::abs(at(i, j) - at(j, i)) > 1e-10) fail(ErrorCode::invalid_input, "covariance is not symmetric");
    }
  }
}

EmbeddingStats fit_stats(std::span<const std::vector<double>> embeddings) {
  if (embeddings.size() < 2) fail(ErrorCode::insufficient_samples, "fit_stats needs at least two embeddings");
  const std::size_t d = embeddings.front().size();
  if (d == 0) fail(ErrorCode::invalid_input, "embeddings have dimension zero");
  const auto n = embeddings.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    if (embeddings[i].size() != d) fail(ErrorCode::invalid_input, "embedding dimensions differ");
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(embeddings[i][j])) fail(ErrorCode::invalid_input, "non-finite embedding value");
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = embeddings[i][j];
    }
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();

  EmbeddingStats s;
  s.n = n;
  s.mu.assign(mean.data(), mean.data() + d);
  s.sigma.resize(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      s.sigma[i * d + j] = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return s;
}

double frechet_distance(const EmbeddingStats& a, const EmbeddingStats& b) {
  a.validate();
  b.validate();
  if (a.dim() != b.dim()) {
    fail(ErrorCode::invalid_input, fmt::format("dimension mismatch: {} vs {}", a.dim(), b.dim()));
  }
  const Eigen::MatrixXd sa = to_matrix(a);
  const Eigen::MatrixXd sb = to_matrix(b);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_a(sa);
  if (eig_a.info() != Eigen::Success) fail(ErrorCode::numerical_failure, "eigendecomposition of sigma_a failed");
  const Eigen::VectorXd root_a = clamped_eigenvalues(eig_a.eigenvalues(), "sigma_a").cwiseSqrt();
  const Eigen::MatrixXd sqrt_a = eig_a.eigenvectors() * root_a.asDiagonal() * eig_a.eigenvectors().transpose();

  Eigen::MatrixXd middle = sqrt_a * sb * sqrt_a;
  middle = 0.5 * (middle + middle.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_m(middle, Eigen::EigenvaluesOnly);
  if (eig_m.info() != Eigen::Success) fail(ErrorCode::numerical_failure, "eigendecomposition of the cross term failed");
  const double cross = clamped_eigenvalues(eig_m.eigenvalues(), "sigma_a^1/2 sigma_b sigma_a^1/2").cwiseSqrt().sum();

  double mean_term = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) mean_term += (a.mu[i] - b.mu[i]) * (a.mu[i] - b.mu[i]);
  const double d = mean_term + sa.trace() + sb.trace() - 2.0 * cross;
  if (d < -1e-8) fail(ErrorCode::numerical_failure, fmt::format("Frechet distance came out negative: {}", d));
  return d < 0.0 ? 0.0 : d;
}

double delta_fed(const EmbeddingStats& ref, const EmbeddingStats& baseline, const EmbeddingStats& intervention) {
  return frechet_distance(ref, intervention) - frechet_distance(ref, baseline);
}

PlddtDelta delta_plddt(std::span<const double> baseline, std::span<const double> intervention) {
  check_plddt(baseline, "baseline");
  check_plddt(intervention, "intervention");
  PlddtDelta r;
  r.mean_baseline = sample_mean(baseline);
  r.mean_intervention = sample_mean(intervention);
  r.sd_baseline = sample_sd(baseline, r.mean_baseline);
  r.sd_intervention = sample_sd(intervention, r.mean_intervention);
  r.delta = r.mean_intervention - r.mean_baseline;
  r.sigma = std::sqrt(r.sd_intervention * r.sd_intervention + r.sd_baseline * r.sd_baseline);
  return r;
}

QualityReport quality_report(const EmbeddingStats& ref, const EmbeddingStats& baseline,
                             const EmbeddingStats& intervention, std::span<const double> plddt_baseline,
                             std::span<const double> plddt_intervention) {
  QualityReport q;
  q.fed_baseline = frechet_distance(ref, baseline);
  q.fed_intervention = frechet_distance(ref, intervention);
  q.delta_fed = q.fed_intervention - q.fed_baseline;
  q.plddt = delta_plddt(plddt_baseline, plddt_intervention);
  q.n_reference = ref.n;
  q.n_baseline = baseline.n;
  q.n_intervention = intervention.n;
  q.dim = ref.dim();
  return q;
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  const CsvTable csv = read_csv(path);
  const std::size_t id_col = csv.column("id");
  std::vector<std::size_t> cols;
  for (std::size_t k = 0;; ++k) {
    const auto c = csv.find_column(fmt::format("e{}", k));
    if (!c) break;
    cols.push_back(*c);
  }
  if (cols.empty()) fail(ErrorCode::format, fmt::format("{}: no embedding columns e0, e1, ...", path.string()));
  EmbeddingTable t;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    t.ids.push_back(csv.rows[r][id_col]);
    std::vector<double> row;
    row.reserve(cols.size());
    for (std::size_t c : cols) row.push_back(csv.number(r, c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string embeddings_csv(const EmbeddingTable& table) {
  if (table.ids.size() != table.rows.size()) fail(ErrorCode::invalid_input, "ids and rows differ in length");
  const std::size_t d = table.rows.empty() ? 0 : table.rows.front().size();
  std::string out = "id";
  for (std::size_t k = 0; k < d; ++k) out += fmt::format(",e{}", k);
  out += '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].size() != d) fail(ErrorCode::invalid_input, "embedding dimensions differ");
    out += table.ids[i];
    for (double v : table.rows[i]) out += "," + format_exact(v);
    out += '\n';
  }
  return out;
}

std::string stats_to_text(const EmbeddingStats& stats) {
  std::string out = fmt::format("logitdiff-stats 1\nn {}\ndim {}\nmu", stats.n, stats.dim());
  for (double v : stats.mu) out += " " + format_exact(v);
  out += "\nsigma";
  for (double v : stats.sigma) out += " " + format_exact(v);
  out += "\nend\n";
  return out;
}

EmbeddingStats stats_from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto next_line = [&](std::string_view expect) {
    if (!std::getline(in, line)) fail(ErrorCode::format, fmt::format("stats file truncated before '{}'", expect));
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key != expect) fail(ErrorCode::format, fmt::format("expected '{}' in stats file, found '{}'", expect, key));
    return fields;
  };
  {
    auto f = next_line("logitdiff-stats");
    int version = 0;
    f >> version;
    if (version != 1) fail(ErrorCode::format, "unsupported stats file version");
  }
  EmbeddingStats s;
  std::size_t d = 0;
  next_line("n") >> s.n;
  next_line("dim") >> d;
  auto mu = next_line("mu");
  s.mu = parse_numbers(mu, d, "mu");
  auto sigma = next_line("sigma");
  s.sigma = parse_numbers(sigma, d * d, "sigma");
  next_line("end");
  s.validate();
  return s;
}

std::filesystem::path StatsCache::path_for(std::span<const std::vector<double>> embeddings) const {
  std::uint64_t h = fnv1a64(fmt::format("{}x{}", embeddings.size(), embeddings.empty() ? 0 : embeddings[0].size()));
  for (const auto& row : embeddings) h = fnv1a64(std::span<const double>(row), h);
  return dir_ / fmt::format("stats-{:016x}.txt", h);
}

EmbeddingStats StatsCache::get_or_fit(std::span<const std::vector<double>> embeddings) {
  const auto path = path_for(embeddings);
  if (std::filesystem::exists(path)) return stats_from_text(read_text_file(path));
  EmbeddingStats s = fit_stats(embeddings);
  std::filesystem::create_directories(dir_);
  write_file_atomic(path, stats_to_text(s));
  return s;
}

}  // namespace logitdiff::quality
