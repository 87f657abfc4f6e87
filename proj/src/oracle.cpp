#include "prewet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "prewet/error.hpp"

namespace prewet::oracle {

double to_double(const Rational& r) { return r.convert_to<double>(); }

// --- path enumeration -------------------------------------------------------

PathLaw enumerate_paths(const BridgeSpec& spec, double budget) {
  spec.validate();
  const int n = spec.length;
  const int free_sites = spec.free_end() ? n : n - 1;
  const double candidates = std::pow(static_cast<double>(spec.truncation + 1), free_sites);
  if (candidates > budget)
    throw Error(Errc::budget_exceeded,
                "enumeration needs " + std::to_string(candidates) + " configurations");

  PathLaw law;
  std::vector<int> path(static_cast<std::size_t>(n) + 1);
  path[0] = spec.start;
  const auto v = [&](int x) { return static_cast<long double>(spec.potential(x)); };

  // depth-first over interior heights, carrying the running jump product and
  // the running potential sum
  auto visit = [&](auto&& self, int i, long double jumps, long double energy) -> void {
    const int prev = path[static_cast<std::size_t>(i) - 1];
    if (i == n && spec.end) {
      const long double pj = spec.step(*spec.end - prev);
      if (pj == 0.0L) return;
      path[static_cast<std::size_t>(n)] = *spec.end;
      law.paths.push_back(path);
      law.weights.push_back(jumps * pj * std::exp(-static_cast<long double>(spec.lambda) * energy));
      return;
    }
    for (int x = 0; x <= spec.truncation; ++x) {
      const long double pj = spec.step(x - prev);
      if (pj == 0.0L) continue;
      path[static_cast<std::size_t>(i)] = x;
      if (i == n) {
        law.paths.push_back(path);
        law.weights.push_back(jumps * pj *
                              std::exp(-static_cast<long double>(spec.lambda) * (energy + v(x))));
      } else {
        self(self, i + 1, jumps * pj, energy + v(x));
      }
    }
  };
  visit(visit, 1, 1.0L, 0.0L);
  for (long double w : law.weights) law.partition += w;
  if (!(law.partition > 0.0L)) throw Error(Errc::empty_path_space, "no admissible path");
  return law;
}

std::vector<double> PathLaw::marginal(int k, int heights) const {
  std::vector<long double> acc(static_cast<std::size_t>(heights), 0.0L);
  for (std::size_t i = 0; i < paths.size(); ++i)
    acc[static_cast<std::size_t>(paths[i][static_cast<std::size_t>(k)])] += weights[i];
  std::vector<double> out(acc.size());
  for (std::size_t x = 0; x < acc.size(); ++x) out[x] = static_cast<double>(acc[x] / partition);
  return out;
}

double PathLaw::mean(int k) const {
  long double s = 0.0L;
  for (std::size_t i = 0; i < paths.size(); ++i) s += weights[i] * paths[i][static_cast<std::size_t>(k)];
  return static_cast<double>(s / partition);
}

double PathLaw::covariance(int i, int j) const {
  long double si = 0.0L, sj = 0.0L, sij = 0.0L;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const long double xi = paths[p][static_cast<std::size_t>(i)];
    const long double xj = paths[p][static_cast<std::size_t>(j)];
    si += weights[p] * xi;
    sj += weights[p] * xj;
    sij += weights[p] * xi * xj;
  }
  return static_cast<double>(sij / partition - (si / partition) * (sj / partition));
}

namespace {

long area_of(const std::vector<int>& path) {
  long a = 0;
  for (std::size_t i = 1; i < path.size(); ++i) a += path[i];
  return a;
}

}  // namespace

double PathLaw::area_at_least(double threshold) const {
  long double s = 0.0L;
  for (std::size_t i = 0; i < paths.size(); ++i)
    if (static_cast<double>(area_of(paths[i])) >= threshold) s += weights[i];
  return static_cast<double>(s / partition);
}

double PathLaw::area_at_most(double threshold) const {
  long double s = 0.0L;
  for (std::size_t i = 0; i < paths.size(); ++i)
    if (static_cast<double>(area_of(paths[i])) <= threshold) s += weights[i];
  return static_cast<double>(s / partition);
}

double PathLaw::mean_area() const {
  long double s = 0.0L;
  for (std::size_t i = 0; i < paths.size(); ++i) s += weights[i] * area_of(paths[i]);
  return static_cast<double>(s / partition);
}

// --- walk laws ----------------------------------------------------------------

LatticeLaw<Rational> lazy_rational_step() {
  return {-1, {Rational(1, 4), Rational(1, 2), Rational(1, 4)}};
}

LatticeLaw<long double> step_law(const StepDistribution& step) {
  LatticeLaw<long double> law;
  law.offset = step.min_jump();
  for (double p : step.dense()) law.mass.push_back(p);
  return law;
}

template <class T>
std::vector<LatticeLaw<T>> walk_laws(const LatticeLaw<T>& step, int m) {
  std::vector<LatticeLaw<T>> laws;
  laws.push_back({0, {T(1)}});
  for (int k = 1; k <= m; ++k) {
    const auto& prev = laws.back();
    LatticeLaw<T> next;
    next.offset = prev.offset + step.offset;
    next.mass.assign(prev.mass.size() + step.mass.size() - 1, T(0));
    for (std::size_t i = 0; i < prev.mass.size(); ++i)
      for (std::size_t j = 0; j < step.mass.size(); ++j) next.mass[i + j] += prev.mass[i] * step.mass[j];
    laws.push_back(std::move(next));
  }
  return laws;
}

template <class T>
T variance_of(const LatticeLaw<T>& step) {
  T mean(0), second(0);
  for (int x = step.lowest(); x <= step.highest(); ++x) {
    mean += T(x) * step.at(x);
    second += T(x) * T(x) * step.at(x);
  }
  return second - mean * mean;
}

template <class T>
BridgeMoments<T> bridge_conditional_moments(const LatticeLaw<T>& step, int m, int d) {
  if (m < 1 || m > 14) throw Error(Errc::precondition, "bridge moments need 1 <= m <= 14");
  const auto laws = walk_laws(step, m);
  BridgeMoments<T> out;
  out.endpoint_probability = laws[static_cast<std::size_t>(m)].at(d);
  if (out.endpoint_probability == T(0))
    throw Error(Errc::null_event, "P(S_m = d) = 0 for m=" + std::to_string(m) + " d=" + std::to_string(d));
  for (int k = 0; k <= m; ++k) {
    const auto& head = laws[static_cast<std::size_t>(k)];
    const auto& tail = laws[static_cast<std::size_t>(m - k)];
    T first(0), second(0);
    for (int s = head.lowest(); s <= head.highest(); ++s) {
      const T w = head.at(s) * tail.at(d - s);
      first += T(s) * w;
      second += T(s) * T(s) * w;
    }
    first /= out.endpoint_probability;
    second /= out.endpoint_probability;
    out.mean.push_back(first);
    out.variance.push_back(second - first * first);
    if (k == 1) out.jump_second_moment = second;
  }
  out.jump_variance = out.variance[1];
  return out;
}

namespace {

bool same(const Rational& a, const Rational& b) { return a == b; }
bool same(long double a, long double b) {
  return std::abs(a - b) <= 1e-12L * std::max({1.0L, std::abs(a), std::abs(b)});
}

}  // namespace

template <class T>
bool exchangeability_holds(const LatticeLaw<T>& step, int m, int d) {
  const auto mom = bridge_conditional_moments(step, m, d);
  for (int k = 0; k <= m; ++k) {
    if (!same(mom.mean[static_cast<std::size_t>(k)], T(k) * T(d) / T(m))) return false;
    if (m >= 2 && !same(mom.variance[static_cast<std::size_t>(k)],
                        T(k) * T(m - k) / T(m - 1) * mom.jump_variance))
      return false;
  }
  return true;
}

template <class T>
T conditional_max_tail(const LatticeLaw<T>& step, int m, int d, int M) {
  if (m < 1) throw Error(Errc::precondition, "conditional maximum needs m >= 1");
  // below[s]: paths at s that have stayed <= M at every index 0 < k < current
  LatticeLaw<T> below{0, {T(1)}};
  LatticeLaw<T> above{0, {T(0)}};
  for (int k = 1; k <= m; ++k) {
    LatticeLaw<T> nb, na;
    nb.offset = na.offset = below.offset + step.offset;
    nb.mass.assign(below.mass.size() + step.mass.size() - 1, T(0));
    na.mass.assign(nb.mass.size(), T(0));
    for (std::size_t i = 0; i < below.mass.size(); ++i)
      for (std::size_t j = 0; j < step.mass.size(); ++j) {
        nb.mass[i + j] += below.mass[i] * step.mass[j];
        na.mass[i + j] += above.mass[i] * step.mass[j];
      }
    if (k < m) {
      for (std::size_t i = 0; i < nb.mass.size(); ++i) {
        if (nb.offset + static_cast<int>(i) > M) {
          na.mass[i] += nb.mass[i];
          nb.mass[i] = T(0);
        }
      }
    }
    below = std::move(nb);
    above = std::move(na);
  }
  const T total = below.at(d) + above.at(d);
  if (total == T(0)) throw Error(Errc::null_event, "P(S_m = d) = 0");
  return above.at(d) / total;
}

template std::vector<LatticeLaw<Rational>> walk_laws(const LatticeLaw<Rational>&, int);
template std::vector<LatticeLaw<long double>> walk_laws(const LatticeLaw<long double>&, int);
template Rational variance_of(const LatticeLaw<Rational>&);
template long double variance_of(const LatticeLaw<long double>&);
template BridgeMoments<Rational> bridge_conditional_moments(const LatticeLaw<Rational>&, int, int);
template BridgeMoments<long double> bridge_conditional_moments(const LatticeLaw<long double>&, int, int);
template bool exchangeability_holds(const LatticeLaw<Rational>&, int, int);
template bool exchangeability_holds(const LatticeLaw<long double>&, int, int);
template Rational conditional_max_tail(const LatticeLaw<Rational>&, int, int, int);
template long double conditional_max_tail(const LatticeLaw<long double>&, int, int, int);

// --- small-walk inequalities ---------------------------------------------------

MaxTailReport conditional_max_tail_grid(const LatticeLaw<long double>& step, int m_lo, int m_hi,
                                        int M_lo, int M_hi, int d_max) {
  MaxTailReport r;
  const auto laws = walk_laws(step, m_hi);
  for (int m = m_lo; m <= m_hi; ++m)
    for (int d = -d_max; d <= d_max; ++d) {
      if (laws[static_cast<std::size_t>(m)].at(d) == 0.0L) continue;
      for (int M = M_lo; M <= M_hi; ++M) {
        const double p = static_cast<double>(conditional_max_tail(step, m, d, M));
        r.points.push_back({m, d, M, p});
        r.fitted_constant = std::max(r.fitted_constant, p * M * M / std::pow(m, 1.5));
      }
    }
  return r;
}

OnePointCheck one_point_chebyshev_check(const LatticeLaw<long double>& step, int m, int d, int k,
                                        int M, int D) {
  if (std::abs(d) > D) throw Error(Errc::precondition, "one-point check needs |d| <= D");
  if (k <= 0 || k >= m) throw Error(Errc::precondition, "one-point check needs 0 < k < m");
  if (M <= 0) throw Error(Errc::precondition, "one-point check needs M > 0");
  const auto laws = walk_laws(step, m);
  if (laws[static_cast<std::size_t>(m)].at(d) == 0.0L) throw Error(Errc::null_event, "P(S_m = d) = 0");
  const auto& head = laws[static_cast<std::size_t>(k)];
  const auto& tail = laws[static_cast<std::size_t>(m - k)];
  long double joint = 0.0L;
  for (int s = std::max(head.lowest(), M + D + 1); s <= head.highest(); ++s)
    joint += head.at(s) * tail.at(d - s);
  const long double s2 = variance_of(step);
  const long double m4 = std::pow(static_cast<long double>(M), 4);
  OnePointCheck c;
  c.joint = static_cast<double>(joint);
  c.middle = static_cast<double>(static_cast<long double>(k) * (m - k) * s2 * s2 / m4);
  c.bound = static_cast<double>(static_cast<long double>(m) * m * s2 * s2 / (4.0L * m4));
  return c;
}

EtemadiCheck etemadi_check(const LatticeLaw<long double>& step, int m, int M) {
  if (m < 2 || m > 14) throw Error(Errc::precondition, "Etemadi check needs 2 <= m <= 14");
  // exact maximum law: absorb mass that has exceeded M
  LatticeLaw<long double> below{0, {1.0L}};
  long double exceeded = 0.0L;
  const auto laws = walk_laws(step, m);
  long double worst = 0.0L;
  for (int k = 1; k < m; ++k) {
    LatticeLaw<long double> nb;
    nb.offset = below.offset + step.offset;
    nb.mass.assign(below.mass.size() + step.mass.size() - 1, 0.0L);
    for (std::size_t i = 0; i < below.mass.size(); ++i)
      for (std::size_t j = 0; j < step.mass.size(); ++j) nb.mass[i + j] += below.mass[i] * step.mass[j];
    for (std::size_t i = 0; i < nb.mass.size(); ++i)
      if (nb.offset + static_cast<int>(i) > M) {
        exceeded += nb.mass[i];
        nb.mass[i] = 0.0L;
      }
    below = std::move(nb);

    long double tail = 0.0L;  // P(S_k > M / 3), i.e. 3 S_k > M
    const auto& law = laws[static_cast<std::size_t>(k)];
    for (int s = law.lowest(); s <= law.highest(); ++s)
      if (3 * s > M) tail += law.at(s);
    worst = std::max(worst, tail);
  }
  return {static_cast<double>(exceeded), static_cast<double>(3.0L * worst)};
}

std::optional<int> llt_floor_check(const LatticeLaw<long double>& step, int d, int m_max) {
  const long double s2 = variance_of(step);
  const auto laws = walk_laws(step, m_max);
  std::optional<int> m0;
  for (int m = m_max; m >= 1; --m) {
    const long double floor =
        1.0L / (2.0L * std::numbers::e_v<long double> *
                std::sqrt(2.0L * std::numbers::pi_v<long double> * s2 * m));
    if (laws[static_cast<std::size_t>(m)].at(d) < floor) break;
    m0 = m;
  }
  return m0;
}

double small_droplet_probability(const LatticeLaw<long double>& step, int m, int M, int d) {
  return static_cast<double>(conditional_max_tail(step, m, d, M));
}

DropletReport small_droplet_check(const LatticeLaw<long double>& step, int m_lo, int m_hi, int M_lo,
                                  int M_hi, int d_max) {
  struct Point {
    double ratio;
    bool ok;
  };
  std::vector<Point> pts;
  const auto laws = walk_laws(step, m_hi);
  for (int m = m_lo; m <= m_hi; ++m)
    for (int d = -d_max; d <= d_max; ++d) {
      if (laws[static_cast<std::size_t>(m)].at(d) == 0.0L) continue;
      for (int M = M_lo; M <= M_hi; ++M)
        pts.push_back({static_cast<double>(m) / (static_cast<double>(M) * M),
                       small_droplet_probability(step, m, M, d) <= 1.0 / 3.0});
    }
  DropletReport r;
  r.points = pts.size();
  double first_bad = std::numeric_limits<double>::infinity();
  for (const auto& p : pts)
    if (!p.ok) first_bad = std::min(first_bad, p.ratio);
  for (const auto& p : pts)
    if (p.ratio < first_bad) r.zeta = std::max(r.zeta, p.ratio);
  r.first_violation = std::isfinite(first_bad) ? first_bad : 0.0;
  return r;
}

}  // namespace prewet::oracle
