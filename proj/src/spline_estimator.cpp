#include "tvvar/spline_estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

namespace tvvar {

namespace {

constexpr double kLogLamLo = -8.0;
constexpr double kLogLamHi = 12.0;
constexpr int kGridPoints = 100;
constexpr double kGcvTol = 1e-7;
constexpr int kMaxCycles = 30;

Eigen::VectorXd radial_row(const Eigen::VectorXd& knots, double t) {
  return (knots.array() - t).abs().cube();
}

// Diagonal of the stacked penalty at unit lambda: entry j carries the basis
// penalty eigenvalue for its within-block position.
Eigen::VectorXd penalty_diagonal(const SplineBasis& basis, long n_smooths) {
  const long k = basis.k;
  Eigen::VectorXd d(k * n_smooths);
  for (long s = 0; s < n_smooths; ++s)
    for (long j = 0; j < k; ++j) d(s * k + j) = basis.S(j, j);
  return d;
}

}  // namespace

Eigen::VectorXd SplineBasis::row_at(double t) const {
  Eigen::VectorXd row(k);
  row(0) = 1.0;
  row(1) = t;
  row.tail(k - 2) = W_eval.transpose() * radial_row(knots, t);
  return row;
}

Eigen::MatrixXd SplineBasis::evaluate(const Eigen::VectorXd& times) const {
  Eigen::MatrixXd out(times.size(), k);
  for (long i = 0; i < times.size(); ++i) out.row(i) = row_at(times(i)).transpose();
  return out;
}

int select_k(long n, long p, int k_max) {
  if (n < 1 || p < 1) throw ConfigError("select_k needs positive n and p");
  if (k_max < 3) throw ConfigError("k_max must be at least 3");
  if (3 * (p + 1) >= n)
    throw DataError("spline basis not identified: need 3(p+1) = " + std::to_string(3 * (p + 1)) +
                    " < n = " + std::to_string(n));
  const long largest = (n - 1) / (p + 1);  // largest k with k(p+1) < n
  return static_cast<int>(std::min<long>(largest, k_max));
}

SplineBasis tprs_basis(const Eigen::VectorXd& times, int k) {
  const long m = times.size();
  if (k < 3) throw ConfigError("thin-plate basis needs k >= 3");
  if (k >= m)
    throw DataError("thin-plate basis needs more rows than basis functions (k=" +
                    std::to_string(k) + ", m=" + std::to_string(m) + ")");

  std::vector<double> uniq(times.data(), times.data() + m);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  const long U = static_cast<long>(uniq.size());
  if (U < 2) throw DataError("thin-plate basis needs non-constant times");
  if (U < k)
    throw DataError("only " + std::to_string(U) + " distinct timestamps for k=" +
                    std::to_string(k) + " basis functions");

  SplineBasis basis;
  basis.k = k;
  basis.knots = Eigen::Map<Eigen::VectorXd>(uniq.data(), U);

  Eigen::MatrixXd E(U, U);
  for (long i = 0; i < U; ++i) E.row(i) = radial_row(basis.knots, basis.knots(i)).transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(E);
  if (es.info() != Eigen::Success) throw NumericalError("thin-plate kernel eigendecomposition failed");

  // Top k eigenpairs by magnitude (the kernel matrix is indefinite).
  std::vector<long> idx(U);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](long a, long b) {
    return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
  });
  Eigen::MatrixXd Uk(U, k);
  Eigen::VectorXd dk(k);
  for (int j = 0; j < k; ++j) {
    Uk.col(j) = es.eigenvectors().col(idx[static_cast<std::size_t>(j)]);
    dk(j) = es.eigenvalues()(idx[static_cast<std::size_t>(j)]);
  }

  // Absorb the thin-plate side constraint T' delta = 0, T = [1, t].
  Eigen::MatrixXd T(U, 2);
  T.col(0).setOnes();
  T.col(1) = basis.knots;
  const Eigen::MatrixXd C = T.transpose() * Uk;  // 2 x k
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
  const Eigen::MatrixXd Z = svd.matrixV().rightCols(k - 2);  // null space of C

  const Eigen::MatrixXd Xpen = Uk * dk.asDiagonal() * Z;         // U x (k-2)
  const Eigen::MatrixXd Sz = Z.transpose() * dk.asDiagonal() * Z;  // PSD by constraint

  // Orthonormalize the penalized columns and re-diagonalize the penalty so S
  // comes out diagonal with ascending eigenvalues.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Xpen);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(k - 2).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k - 2, k - 2));
  const Eigen::MatrixXd Pt = Rinv.transpose() * Sz * Rinv;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pes(0.5 * (Pt + Pt.transpose()));
  if (pes.info() != Eigen::Success) throw NumericalError("penalty re-diagonalization failed");
  Eigen::VectorXd lam = pes.eigenvalues().cwiseMax(0.0);  // clamp eigen noise

  basis.W_eval = Uk * (Z * (Rinv * pes.eigenvectors()));
  basis.S = Eigen::MatrixXd::Zero(k, k);
  basis.S.diagonal().tail(k - 2) = lam;
  basis.nullspace_dim = 2;
  basis.B = basis.evaluate(times);
  return basis;
}

GamWorkspace make_gam_workspace(const LaggedDesign& design, long eq_index,
                                const SplineBasis& basis) {
  const long m = design.m();
  const long p = design.p();
  if (eq_index < 0 || eq_index >= p) throw ConfigError("equation index out of range");
  const long k = basis.k;
  const long K = k * (p + 1);
  if (m <= K)
    throw DataError("equation " + std::to_string(eq_index + 1) + " not identified: need more than k(p+1) = " +
                    std::to_string(K) + " included rows, have " + std::to_string(m));

  GamWorkspace ws;
  ws.basis = basis;
  ws.n_smooths = p + 1;
  ws.y = design.responses.col(eq_index);
  ws.Z.resize(m, K);
  ws.Z.leftCols(k) = basis.B;
  for (long s = 1; s <= p; ++s)
    ws.Z.middleCols(s * k, k) = basis.B.array().colwise() * design.predictors.col(s - 1).array();
  return ws;
}

GamFitState solve_gam_at(const GamWorkspace& ws, const Eigen::VectorXd& lambdas) {
  if (lambdas.size() != ws.n_smooths) throw ConfigError("one smoothing parameter per smooth required");
  if (lambdas.minCoeff() < 0.0) throw ConfigError("smoothing parameters must be nonnegative");
  const long K = ws.K();
  const long k = ws.basis.k;
  const double m = static_cast<double>(ws.m());

  const Eigen::MatrixXd M = ws.Z.transpose() * ws.Z;
  Eigen::VectorXd pdiag = penalty_diagonal(ws.basis, ws.n_smooths);
  for (long s = 0; s < ws.n_smooths; ++s) pdiag.segment(s * k, k) *= lambdas(s);

  Eigen::MatrixXd A = M;
  A.diagonal() += pdiag;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("penalized normal equations could not be factorized");

  GamFitState st;
  st.lambdas = lambdas;
  st.theta = ldlt.solve(ws.Z.transpose() * ws.y);
  const Eigen::MatrixXd F = ldlt.solve(M);
  st.edf.resize(ws.n_smooths);
  for (long s = 0; s < ws.n_smooths; ++s)
    st.edf(s) = F.diagonal().segment(s * k, k).sum();
  st.edf_total = F.trace();
  st.rss = (ws.y - ws.Z * st.theta).squaredNorm();
  if (!(st.edf_total < m))
    throw NumericalError("effective degrees of freedom reached the sample size");
  st.gcv = m * st.rss / ((m - st.edf_total) * (m - st.edf_total));
  return st;
}

double gcv_score(const GamWorkspace& ws, const Eigen::VectorXd& lambdas) {
  return solve_gam_at(ws, lambdas).gcv;
}

namespace {

// One-smooth GCV profile: with all other penalties folded into A, eigenreduce
// so each lambda evaluation costs O(K^2).
class SmoothProfile {
 public:
  SmoothProfile(const Eigen::MatrixXd& M, const Eigen::VectorXd& Zty, double yty, double m,
                const Eigen::VectorXd& pdiag_rest, const Eigen::VectorXd& s_block) {
    m_ = m;
    yty_ = yty;
    Eigen::MatrixXd A = M;
    A.diagonal() += pdiag_rest;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success)
      throw NumericalError("penalized normal equations are not positive definite; "
                           "the design may be column-rank deficient");
    const Eigen::MatrixXd L = llt.matrixL();
    const long K = M.rows();

    std::vector<long> nz;
    for (long j = 0; j < K; ++j)
      if (s_block(j) > 0.0) nz.push_back(j);
    Eigen::MatrixXd W(K, static_cast<long>(nz.size()));
    for (std::size_t c = 0; c < nz.size(); ++c) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(K);
      e(nz[c]) = std::sqrt(s_block(nz[c]));
      W.col(static_cast<long>(c)) = L.triangularView<Eigen::Lower>().solve(e);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(W, Eigen::ComputeThinU);
    mu_ = svd.singularValues().array().square();
    Uq_ = svd.matrixU();

    H_ = L.triangularView<Eigen::Lower>().solve(M);
    H_ = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd(H_.transpose()));
    // H_ is now L^-1 M L^-T (symmetric).
    v_ = L.triangularView<Eigen::Lower>().solve(Zty);
    trH_ = H_.trace();
    HUq_ = H_ * Uq_;
    hq_ = (Uq_.transpose() * HUq_).diagonal();
    vq_ = Uq_.transpose() * v_;
    Hv_ = H_ * v_;
    L_ = L;
  }

  double gcv(double lambda) const {
    const long r = mu_.size();
    Eigen::VectorXd shrink(r);
    for (long j = 0; j < r; ++j) shrink(j) = lambda * mu_(j) / (1.0 + lambda * mu_(j));
    const double edf = trH_ - shrink.dot(hq_);
    if (!(edf < m_)) return std::numeric_limits<double>::infinity();
    // g = (I + lambda C)^-1 v = v - Uq diag(shrink) Uq' v
    const Eigen::VectorXd a = shrink.cwiseProduct(vq_);
    const Eigen::VectorXd g = v_ - Uq_ * a;
    const double gty = g.dot(v_);
    // g' H g, using H v and H Uq to avoid forming H g from scratch
    const Eigen::VectorXd Hg = Hv_ - HUq_ * a;
    const double gHg = g.dot(Hg);
    const double rss = yty_ - 2.0 * gty + gHg;
    const double denom = m_ - edf;
    return m_ * std::max(rss, 0.0) / (denom * denom);
  }

 private:
  double m_ = 0.0, yty_ = 0.0, trH_ = 0.0;
  Eigen::MatrixXd H_, Uq_, HUq_, L_;
  Eigen::VectorXd mu_, v_, hq_, vq_, Hv_;
};

double golden_min(const SmoothProfile& prof, double lo, double hi, double tol, double& best_f) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = prof.gcv(std::pow(10.0, c));
  double fd = prof.gcv(std::pow(10.0, d));
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = prof.gcv(std::pow(10.0, c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = prof.gcv(std::pow(10.0, d));
    }
  }
  const double x = fc < fd ? c : d;
  best_f = std::min(fc, fd);
  return x;
}

}  // namespace

GcvOptimum optimize_gcv(const GamWorkspace& ws) {
  const long k = ws.basis.k;
  const long S = ws.n_smooths;
  const Eigen::MatrixXd M = ws.Z.transpose() * ws.Z;
  const Eigen::VectorXd Zty = ws.Z.transpose() * ws.y;
  const double yty = ws.y.squaredNorm();
  const double m = static_cast<double>(ws.m());
  const Eigen::VectorXd unit_pdiag = penalty_diagonal(ws.basis, S);

  GcvOptimum opt;
  Eigen::VectorXd loglam = Eigen::VectorXd::Zero(S);
  double prev_gcv = std::numeric_limits<double>::infinity();
  const double grid_step = (kLogLamHi - kLogLamLo) / (kGridPoints - 1);

  for (int cycle = 0; cycle < kMaxCycles; ++cycle) {
    double cycle_gcv = prev_gcv;
    for (long s = 0; s < S; ++s) {
      Eigen::VectorXd pdiag_rest = unit_pdiag;
      for (long r = 0; r < S; ++r)
        pdiag_rest.segment(r * k, k) *= (r == s ? 0.0 : std::pow(10.0, loglam(r)));
      Eigen::VectorXd s_block = Eigen::VectorXd::Zero(M.rows());
      s_block.segment(s * k, k) = unit_pdiag.segment(s * k, k);

      const SmoothProfile prof(M, Zty, yty, m, pdiag_rest, s_block);
      const double f_cur = prof.gcv(std::pow(10.0, loglam(s)));

      int best_i = 0;
      double best_f = std::numeric_limits<double>::infinity();
      for (int i = 0; i < kGridPoints; ++i) {
        const double f = prof.gcv(std::pow(10.0, kLogLamLo + grid_step * i));
        if (f < best_f) {
          best_f = f;
          best_i = i;
        }
      }
      const double lo = kLogLamLo + grid_step * std::max(0, best_i - 1);
      const double hi = kLogLamLo + grid_step * std::min(kGridPoints - 1, best_i + 1);
      double refined_f = best_f;
      const double refined_x = golden_min(prof, lo, hi, 1e-4, refined_f);
      double step_x = kLogLamLo + grid_step * best_i;
      double step_f = best_f;
      if (refined_f <= step_f) {
        step_x = refined_x;
        step_f = refined_f;
      }
      // Keep the incumbent if the scan cannot improve on it, so the cycle
      // objective never increases.
      if (f_cur < step_f) {
        step_x = loglam(s);
        step_f = f_cur;
      }
      loglam(s) = step_x;
      cycle_gcv = step_f;
    }
    opt.cycles = cycle + 1;
    if (std::abs(prev_gcv - cycle_gcv) < kGcvTol) {
      prev_gcv = cycle_gcv;
      opt.converged = true;
      break;
    }
    prev_gcv = cycle_gcv;
    opt.converged = false;
  }

  opt.lambdas = loglam.unaryExpr([](double x) { return std::pow(10.0, x); });
  opt.gcv = prev_gcv;
  return opt;
}

GamEquationFit fit_gam_equation_at(const LaggedDesign& design, long eq_index,
                                   const SplineBasis& basis, const Eigen::VectorXd& lambdas) {
  const GamWorkspace ws = make_gam_workspace(design, eq_index, basis);
  const GamFitState st = solve_gam_at(ws, lambdas);
  const long k = basis.k;
  const long S = ws.n_smooths;

  GamEquationFit fit;
  fit.k = basis.k;
  fit.m = ws.m();
  fit.n_smooths = S;
  fit.basis = basis;
  fit.lambdas = lambdas;
  fit.theta.resize(k, S);
  for (long s = 0; s < S; ++s) fit.theta.col(s) = st.theta.segment(s * k, k);
  fit.edf = st.edf;
  fit.edf_total = st.edf_total;
  fit.gcv = st.gcv;
  fit.sigma2 = st.rss / (static_cast<double>(ws.m()) - st.edf_total);

  Eigen::VectorXd pdiag = penalty_diagonal(basis, S);
  for (long s = 0; s < S; ++s) pdiag.segment(s * k, k) *= lambdas(s);
  Eigen::MatrixXd A = ws.Z.transpose() * ws.Z;
  A.diagonal() += pdiag;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("posterior covariance factorization failed");
  fit.posterior_cov = ldlt.solve(Eigen::MatrixXd::Identity(ws.K(), ws.K())) * fit.sigma2;

  for (long s = 0; s < S; ++s) {
    if (fit.edf(s) > 0.9 * static_cast<double>(k)) {
      fit.warnings.push_back("smooth " + std::to_string(s) + " in equation " +
                             std::to_string(eq_index + 1) + " has edf " +
                             std::to_string(fit.edf(s)) + " near the basis size k=" +
                             std::to_string(k) + "; consider a larger k");
    }
  }
  return fit;
}

GamEquationFit fit_gam_equation(const LaggedDesign& design, long eq_index,
                                const SplineBasis& basis) {
  const GamWorkspace ws = make_gam_workspace(design, eq_index, basis);
  const GcvOptimum opt = optimize_gcv(ws);
  GamEquationFit fit = fit_gam_equation_at(design, eq_index, basis, opt.lambdas);
  fit.gcv_converged = opt.converged;
  if (!opt.converged)
    fit.warnings.push_back("GCV search hit the cycle limit in equation " +
                           std::to_string(eq_index + 1) + "; returning the best value found");
  return fit;
}

SmoothBands credible_bands(const GamEquationFit& fit, const Eigen::VectorXd& eval_times,
                           double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("credible level must lie in (0,1)");
  const double z = normal_quantile(0.5 + level / 2.0);
  const long E = eval_times.size();
  const long k = fit.k;
  const Eigen::MatrixXd Be = fit.basis.evaluate(eval_times);

  SmoothBands bands;
  bands.point.resize(E, fit.n_smooths);
  bands.lower.resize(E, fit.n_smooths);
  bands.upper.resize(E, fit.n_smooths);
  for (long s = 0; s < fit.n_smooths; ++s) {
    const Eigen::MatrixXd cov_ss = fit.posterior_cov.block(s * k, s * k, k, k);
    const Eigen::VectorXd point = Be * fit.theta.col(s);
    for (long e = 0; e < E; ++e) {
      const double var = Be.row(e) * cov_ss * Be.row(e).transpose();
      if (var < -1e-10)
        throw NumericalError("posterior covariance is not positive semidefinite");
      const double half = z * std::sqrt(std::max(var, 0.0));
      bands.point(e, s) = point(e);
      bands.lower(e, s) = point(e) - half;
      bands.upper(e, s) = point(e) + half;
    }
  }
  return bands;
}

TimeVaryingVarModel fit_tv_var_gam(const LaggedDesign& design, const Eigen::VectorXd& est_points,
                                   int k, bool threshold, ExecutionPolicy exec) {
  if (est_points.size() == 0) throw ConfigError("at least one estimation point is required");
  const long p = design.p();
  const long E = est_points.size();
  const int k_s = k > 0 ? k : select_k(design.m(), p);
  const SplineBasis basis = tprs_basis(design.response_times, k_s);

  TimeVaryingVarModel model;
  model.method = threshold ? Method::GAM_ST : Method::GAM;
  model.est_points = est_points;
  model.labels = design.labels;
  model.scaling = design.scaling;
  model.intercepts.resize(p, E);
  model.coeffs.assign(static_cast<std::size_t>(E), Eigen::MatrixXd::Zero(p, p));
  model.band_lower.assign(static_cast<std::size_t>(E), Eigen::MatrixXd::Zero(p, p));
  model.band_upper.assign(static_cast<std::size_t>(E), Eigen::MatrixXd::Zero(p, p));
  model.band_intercept_lower.resize(p, E);
  model.band_intercept_upper.resize(p, E);

  std::exception_ptr error = nullptr;
  std::atomic<bool> failed{false};
  std::vector<std::vector<std::string>> eq_warnings(static_cast<std::size_t>(p));
  auto run_eq = [&](long i) {
    const GamEquationFit fit = fit_gam_equation(design, i, basis);
    eq_warnings[static_cast<std::size_t>(i)] = fit.warnings;
    const SmoothBands bands = credible_bands(fit, est_points, 0.95);
    for (long e = 0; e < E; ++e) {
      model.intercepts(i, e) = bands.point(e, 0);
      model.band_intercept_lower(i, e) = bands.lower(e, 0);
      model.band_intercept_upper(i, e) = bands.upper(e, 0);
      for (long j = 0; j < p; ++j) {
        double value = bands.point(e, j + 1);
        if (threshold && bands.lower(e, j + 1) <= 0.0 && bands.upper(e, j + 1) >= 0.0)
          value = 0.0;
        model.coeffs[static_cast<std::size_t>(e)](i, j) = value;
        model.band_lower[static_cast<std::size_t>(e)](i, j) = bands.lower(e, j + 1);
        model.band_upper[static_cast<std::size_t>(e)](i, j) = bands.upper(e, j + 1);
      }
    }
  };

  if (exec == ExecutionPolicy::Serial) {
    for (long i = 0; i < p; ++i) run_eq(i);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < p; ++i) {
      if (failed.load(std::memory_order_relaxed)) continue;
      try {
        run_eq(i);
      } catch (...) {
#pragma omp critical
        {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    }
    if (error) std::rethrow_exception(error);
  }
  for (const auto& w : eq_warnings)
    model.warnings.insert(model.warnings.end(), w.begin(), w.end());
  return model;
}

}  // namespace tvvar
