#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "antibunch/aperture.hpp"
#include "antibunch/core_model.hpp"
#include "antibunch/numerics.hpp"
#include "antibunch/parallel.hpp"

namespace antibunch {

/// Point detectors on the detection plane (m).
struct DetectorPair {
  double x1 = 0.0;
  double x2 = 0.0;
};

/// The two non-vanishing polarization components of the coincidence amplitude:
/// psi_eo has the e photon at detector 1, psi_oe the o photon.
struct BiphotonAmplitude {
  std::complex<double> psi_eo{};
  std::complex<double> psi_oe{};
};

/// ||Psi||^2 = |psi_eo|^2 + |psi_oe|^2.
inline double coincidence_probability(const BiphotonAmplitude& amp) noexcept {
  return std::norm(amp.psi_eo) + std::norm(amp.psi_oe);
}

// ---------------------------------------------------------------------------
// Closed form (delta slits, Fraunhofer)
// ---------------------------------------------------------------------------

enum class ClosedFormTerms {
  full,          // keeps the exp(-(d/2w0)^2) cos[kd (x1+x2) / 2z] same-slit term
  focused_limit  // drops it (w0 << d)
};

struct ClosedFormOptions {
  double retardance = std::numbers::pi / 2;
  ClosedFormTerms terms = ClosedFormTerms::full;
};

namespace detail {

// Evaluates the closed form from x1 + x2 and x1 - x2 directly, so that grids
// can pass exactly antisymmetric separations.
//
// For wave-plate retardance phi the opposite-slit term becomes
// cos(beta -/+ phi); at phi = pi/2 this is +/- sin(beta), the quarter-wave case.
inline BiphotonAmplitude closed_form_sum_difference(double sum, double difference, const PhysicalSetup& setup,
                                                    const ClosedFormOptions& options) {
  const double half_kappa = 0.5 * setup.fringe_wavenumber();
  const double weight = options.terms == ClosedFormTerms::focused_limit ? 0.0 : setup.sum_term_weight();
  const double same_slit = weight * std::cos(half_kappa * sum);
  const double beta = half_kappa * difference;
  double cos_phi = std::cos(options.retardance);
  double sin_phi = std::sin(options.retardance);
  if (options.retardance == std::numbers::pi / 2) {
    cos_phi = 0.0;
    sin_phi = 1.0;
  }
  const double even = cos_phi == 0.0 ? 0.0 : std::cos(beta) * cos_phi;
  const double odd = std::sin(beta) * sin_phi;
  return {same_slit + even + odd, same_slit + even - odd};
}

}  // namespace detail

/// psi_eo/oe = exp(-(d/2w0)^2) cos[kd (x1+x2) / 2z] +/- sin[kd (x1-x2) / 2z],
/// up to a common constant. Slit width is ignored.
inline BiphotonAmplitude amplitude_closed_form(DetectorPair p, const PhysicalSetup& setup,
                                               const ClosedFormOptions& options = {}) {
  return detail::closed_form_sum_difference(p.x1 + p.x2, p.x1 - p.x2, setup, options);
}

// ---------------------------------------------------------------------------
// Numeric quadrature over the aperture-plane angular spectrum
// ---------------------------------------------------------------------------

enum class DetectionKernel { fraunhofer, fresnel };

/// Evaluation strategy for NumericAmplitude.
///   moments: delta slits only; the q integral reduces to x-independent moments
///            int Phi_A exp(i q1 c + i q2 c') per pair of slit positions.
///   direct:  full double sum per detector pair; any slit width.
enum class NumericPath { automatic, moments, direct };

/// Quadrature in rotated coordinates (q+ = q1 + q2, q- = q1 - q2), axis 0 = q+.
/// The pump confines q+ to |q+| <= 12 / w0 and the phase-matching sinc is kept
/// to |q-| <= 8 sqrt(4 pi K / L), i.e. |q1|, |q2| <= max(6 / w0, 4 sqrt(4 pi K / L))
/// split between the two axes. Node counts give 8 nodes per period of the
/// fastest phase on each axis.
inline QuadratureSpec default_quadrature(const PhysicalSetup& setup, const ApertureFunction& ap) {
  const double big_k = setup.pump_wavenumber();
  const double w0 = setup.pump_waist;
  const double length = setup.crystal_length;
  const double s = setup.crystal_aperture_distance;

  QuadratureSpec spec;
  spec.half_width = {12.0 / w0, 8.0 * std::sqrt(4.0 * std::numbers::pi * big_k / length)};
  const double extent = ap.max_extent();
  const double freq_sum = extent;
  const double freq_diff = extent + length * spec.half_width[1] / (2.0 * big_k) + s * spec.half_width[1] / big_k;
  auto nodes_for = [](double half_width, double freq) {
    const double periods = 2.0 * half_width * freq / (2.0 * std::numbers::pi);
    return static_cast<std::size_t>(std::ceil(8.0 * periods));
  };
  auto round8 = [](std::size_t n) { return (n + 7) / 8 * 8; };
  spec.nodes = {round8(std::max<std::size_t>({16, 48, nodes_for(spec.half_width[0], freq_sum)})),
                round8(std::max<std::size_t>(16, nodes_for(spec.half_width[1], freq_diff)))};
  spec.rule = QuadratureRule::gauss_legendre;
  spec.tolerance = 1e-6;
  return spec;
}

/// Rejects domains that cut into the pump or the central phase-matching lobes.
inline void check_quadrature_coverage(const QuadratureSpec& spec, const PhysicalSetup& setup) {
  spec.validate();
  const double min_sum = 6.0 / setup.pump_waist;
  const double min_diff = 4.0 * std::sqrt(4.0 * std::numbers::pi * setup.pump_wavenumber() / setup.crystal_length);
  if (spec.half_width[0] < min_sum)
    throw std::invalid_argument("quadrature: q+ half-width " + std::to_string(spec.half_width[0]) +
                                " does not cover the pump spectrum (need >= " + std::to_string(min_sum) + ")");
  if (spec.half_width[1] < min_diff)
    throw std::invalid_argument("quadrature: q- half-width " + std::to_string(spec.half_width[1]) +
                                " does not cover the phase-matching function (need >= " + std::to_string(min_diff) +
                                ")");
}

/// Coincidence amplitude from the double q integral of Phi_A times the aperture
/// transfer functions and the detection kernel. Construction does all
/// x-independent work; evaluation is const and thread-safe.
class NumericAmplitude {
 public:
  NumericAmplitude(const PhysicalSetup& setup, const ApertureFunction& aperture, const QuadratureSpec& spec,
                   DetectionKernel kernel = DetectionKernel::fraunhofer, NumericPath path = NumericPath::automatic)
      : setup_(setup), aperture_(aperture), spec_(spec), kernel_(kernel) {
    setup_.validate();
    aperture_.validate();
    check_quadrature_coverage(spec_, setup_);
    if (kernel_ == DetectionKernel::fresnel && !aperture_.all_delta())
      throw std::invalid_argument("numeric amplitude: the Fresnel kernel supports delta slits only");
    if (path == NumericPath::moments && !aperture_.all_delta())
      throw std::invalid_argument("numeric amplitude: the moment path needs delta slits");
    moments_ = path == NumericPath::moments || (path == NumericPath::automatic && aperture_.all_delta());
    if (moments_) {
      build_moments();
    } else {
      build_elements();
      coarse_ = build_level(spec_);
      fine_ = build_level(spec_.refined());
    }
  }

  BiphotonAmplitude operator()(DetectorPair p) const { return moments_ ? eval_moments(p) : eval_direct(p); }

  /// Amplitudes on the product grid x1s x x2s, row-major in x1. Same values as
  /// calling operator() per pair; the direct path shares per-node work.
  std::vector<BiphotonAmplitude> evaluate_grid(const std::vector<double>& x1s, const std::vector<double>& x2s,
                                               unsigned threads = 1) const {
    if (!moments_) return eval_direct_grid(x1s, x2s, threads);
    std::vector<BiphotonAmplitude> out(x1s.size() * x2s.size());
    parallel_for(x1s.size(), threads, [&](std::size_t i) {
      for (std::size_t j = 0; j < x2s.size(); ++j) out[i * x2s.size() + j] = eval_moments({x1s[i], x2s[j]});
    });
    return out;
  }

  bool uses_moments() const noexcept { return moments_; }
  const QuadratureSpec& quadrature() const noexcept { return spec_; }

 private:
  struct Level {
    std::vector<double> q1, q2;
    std::vector<std::complex<double>> weighted;  // 1/2 w+ w- Phi_A(q1, q2)
  };

  template <class Visit>
  void for_each_node(const QuadratureSpec& spec, Visit&& visit) const {
    const Rule1D plus = make_rule(spec.rule, spec.nodes[0], spec.half_width[0]);
    const Rule1D minus = make_rule(spec.rule, spec.nodes[1], spec.half_width[1]);
    for (std::size_t a = 0; a < plus.nodes.size(); ++a) {
      for (std::size_t b = 0; b < minus.nodes.size(); ++b) {
        const double q1 = 0.5 * (plus.nodes[a] + minus.nodes[b]);
        const double q2 = 0.5 * (plus.nodes[a] - minus.nodes[b]);
        const std::complex<double> phi = aperture_plane_spectrum({q1, 0.0}, {q2, 0.0}, setup_);
        visit(q1, q2, 0.5 * plus.weights[a] * minus.weights[b] * phi);
      }
    }
  }

  Level build_level(const QuadratureSpec& spec) const {
    Level level;
    const std::size_t count = spec.nodes[0] * spec.nodes[1];
    level.q1.reserve(count);
    level.q2.reserve(count);
    level.weighted.reserve(count);
    for_each_node(spec, [&](double q1, double q2, std::complex<double> w) {
      level.q1.push_back(q1);
      level.q2.push_back(q2);
      level.weighted.push_back(w);
    });
    return level;
  }

  // --- moment path -------------------------------------------------------

  void build_moments() {
    for (Polarization p : {Polarization::e, Polarization::o})
      for (const SlitElement& s : aperture_.channel(p, p)) positions_.push_back(s.center);
    std::sort(positions_.begin(), positions_.end());
    positions_.erase(std::unique(positions_.begin(), positions_.end()), positions_.end());
    const std::size_t n = positions_.size();
    for (Polarization p : {Polarization::e, Polarization::o}) {
      auto& coeff = p == Polarization::e ? coeff_e_ : coeff_o_;
      coeff.assign(n, {});
      for (const SlitElement& s : aperture_.channel(p, p)) {
        const auto it = std::lower_bound(positions_.begin(), positions_.end(), s.center);
        coeff[static_cast<std::size_t>(it - positions_.begin())] += s.transmission;
      }
    }

    auto accumulate = [&](const QuadratureSpec& spec, double& mass) {
      std::vector<std::complex<double>> m(n * n);
      std::vector<std::complex<double>> e1(n), e2(n);
      mass = 0.0;
      for_each_node(spec, [&](double q1, double q2, std::complex<double> w) {
        for (std::size_t i = 0; i < n; ++i) {
          e1[i] = std::polar(1.0, q1 * positions_[i]);
          e2[i] = std::polar(1.0, q2 * positions_[i]);
        }
        for (std::size_t i = 0; i < n; ++i) {
          const std::complex<double> wi = w * e1[i];
          for (std::size_t j = 0; j < n; ++j) m[i * n + j] += wi * e2[j];
        }
        mass += std::abs(w);
      });
      return m;
    };
    double coarse_mass = 0.0;
    double fine_mass = 0.0;
    const auto coarse = accumulate(spec_, coarse_mass);
    moments_fine_ = accumulate(spec_.refined(), fine_mass);
    double change = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i) change = std::max(change, std::abs(moments_fine_[i] - coarse[i]));
    const double allowed = spec_.tolerance * fine_mass;
    if (change > allowed)
      throw QuadratureNonConvergence("numeric amplitude: slit moments not converged under node doubling (change " +
                                         std::to_string(change) + ", allowed " + std::to_string(allowed) + ")",
                                     change, allowed);
  }

  std::complex<double> detector_phase(double x, double c) const {
    const double k = setup_.wavenumber();
    const double z = setup_.aperture_detector_distance;
    if (kernel_ == DetectionKernel::fraunhofer) return std::polar(1.0, -k * x * c / z);
    return std::polar(1.0, k * (x - c) * (x - c) / (2.0 * z));
  }

  BiphotonAmplitude eval_moments(DetectorPair p) const {
    const std::size_t n = positions_.size();
    std::vector<std::complex<double>> d1(n), d2(n);
    for (std::size_t i = 0; i < n; ++i) {
      d1[i] = detector_phase(p.x1, positions_[i]);
      d2[i] = detector_phase(p.x2, positions_[i]);
    }
    auto channel = [&](const std::vector<std::complex<double>>& first, const std::vector<std::complex<double>>& second) {
      std::complex<double> sum{};
      for (std::size_t i = 0; i < n; ++i) {
        if (first[i] == 0.0) continue;
        std::complex<double> row{};
        for (std::size_t j = 0; j < n; ++j) row += second[j] * d2[j] * moments_fine_[i * n + j];
        sum += first[i] * d1[i] * row;
      }
      return sum;
    };
    return {channel(coeff_e_, coeff_o_), channel(coeff_o_, coeff_e_)};
  }

  // --- direct path -------------------------------------------------------

  // Each channel kernel at (x, q) is a sum over slits of a position factor
  // times a node factor, times the slit sinc at kx/z - q for finite slits.
  // Fraunhofer: t exp(-ikxc/z) exp(iqc) a sinc[(kx/z - q) a / 2].
  // Fresnel (delta slits only): t exp[ik(x - c)^2 / 2z] exp(iqc).
  struct KernelElement {
    bool ordinary = false;
    double center = 0.0;
    double width = 0.0;
    std::complex<double> transmission;
  };

  struct PositionTable {
    std::vector<double> kxz;                  // per position
    std::vector<std::complex<double>> phase;  // [position * m + element]
    std::vector<double> sin_x, cos_x;         // of k x a / 2z, same layout
  };

  struct NodeFactors {
    std::vector<std::complex<double>> phase;
    std::vector<double> sin_q, cos_q;
  };

  struct GridSums {
    std::vector<double> eo_re, eo_im, oe_re, oe_im, mass_eo, mass_oe;

    void zero(std::size_t n) {
      for (auto* v : {&eo_re, &eo_im, &oe_re, &oe_im, &mass_eo, &mass_oe}) v->assign(n, 0.0);
    }
    void add(const GridSums& o) {
      for (std::size_t i = 0; i < eo_re.size(); ++i) {
        eo_re[i] += o.eo_re[i];
        eo_im[i] += o.eo_im[i];
        oe_re[i] += o.oe_re[i];
        oe_im[i] += o.oe_im[i];
        mass_eo[i] += o.mass_eo[i];
        mass_oe[i] += o.mass_oe[i];
      }
    }
  };

  void build_elements() {
    for (Polarization p : {Polarization::e, Polarization::o})
      for (const SlitElement& s : aperture_.channel(p, p))
        elements_.push_back({p == Polarization::o, s.center, s.width, s.transmission});
  }

  PositionTable tabulate_positions(const std::vector<double>& xs) const {
    const std::size_t m = elements_.size();
    const double k = setup_.wavenumber();
    const double z = setup_.aperture_detector_distance;
    PositionTable t;
    t.kxz.resize(xs.size());
    t.phase.resize(xs.size() * m);
    t.sin_x.resize(xs.size() * m);
    t.cos_x.resize(xs.size() * m);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      t.kxz[i] = k * xs[i] / z;
      for (std::size_t e = 0; e < m; ++e) {
        const KernelElement& el = elements_[e];
        const double arg = kernel_ == DetectionKernel::fraunhofer
                               ? -t.kxz[i] * el.center
                               : k * (xs[i] - el.center) * (xs[i] - el.center) / (2.0 * z);
        t.phase[i * m + e] = el.transmission * std::polar(1.0, arg);
        t.sin_x[i * m + e] = std::sin(0.5 * t.kxz[i] * el.width);
        t.cos_x[i * m + e] = std::cos(0.5 * t.kxz[i] * el.width);
      }
    }
    return t;
  }

  void node_factors(double q, NodeFactors& f) const {
    const std::size_t m = elements_.size();
    f.phase.resize(m);
    f.sin_q.resize(m);
    f.cos_q.resize(m);
    for (std::size_t e = 0; e < m; ++e) {
      f.phase[e] = std::polar(1.0, q * elements_[e].center);
      f.sin_q[e] = std::sin(0.5 * q * elements_[e].width);
      f.cos_q[e] = std::cos(0.5 * q * elements_[e].width);
    }
  }

  void kernels(const PositionTable& t, const NodeFactors& f, double q, std::vector<std::complex<double>>& e_out,
               std::vector<std::complex<double>>& o_out) const {
    const std::size_t m = elements_.size();
    for (std::size_t i = 0; i < t.kxz.size(); ++i) {
      std::complex<double> e_sum{}, o_sum{};
      for (std::size_t e = 0; e < m; ++e) {
        const KernelElement& el = elements_[e];
        std::complex<double> v = t.phase[i * m + e] * f.phase[e];
        if (el.width > 0.0) {
          const double u = 0.5 * (t.kxz[i] - q) * el.width;
          // sin(A - B) expanded; the direct branch covers the cancellation near u = 0.
          const double s = std::abs(u) < 1e-4 ? sinc(u)
                                               : (t.sin_x[i * m + e] * f.cos_q[e] - t.cos_x[i * m + e] * f.sin_q[e]) / u;
          v *= el.width * s;
        }
        (el.ordinary ? o_sum : e_sum) += v;
      }
      e_out[i] = e_sum;
      o_out[i] = o_sum;
    }
  }

  // Sums over a node range are accumulated in a fixed number of blocks and
  // reduced in block order, so the result does not depend on the thread count.
  GridSums sum_level_grid(const Level& level, const PositionTable& t1, const PositionTable& t2,
                          unsigned threads) const {
    constexpr std::size_t kBlocks = 32;
    const std::size_t n1 = t1.kxz.size();
    const std::size_t n2 = t2.kxz.size();
    const std::size_t count = level.weighted.size();
    const std::size_t blocks = std::min(kBlocks, count);
    const std::size_t chunk = (count + blocks - 1) / blocks;
    std::vector<GridSums> partial(blocks);

    parallel_for(blocks, threads, [&](std::size_t b) {
      GridSums& acc = partial[b];
      acc.zero(n1 * n2);
      NodeFactors f1, f2;
      std::vector<std::complex<double>> e1(n1), o1(n1), e2(n2), o2(n2);
      std::vector<double> e2r(n2), e2i(n2), e2a(n2), o2r(n2), o2i(n2), o2a(n2);
      for (std::size_t n = b * chunk; n < std::min(count, (b + 1) * chunk); ++n) {
        node_factors(level.q1[n], f1);
        node_factors(level.q2[n], f2);
        kernels(t1, f1, level.q1[n], e1, o1);
        kernels(t2, f2, level.q2[n], e2, o2);
        for (std::size_t j = 0; j < n2; ++j) {
          e2r[j] = e2[j].real();
          e2i[j] = e2[j].imag();
          e2a[j] = std::abs(e2[j]);
          o2r[j] = o2[j].real();
          o2i[j] = o2[j].imag();
          o2a[j] = std::abs(o2[j]);
        }
        const std::complex<double> w = level.weighted[n];
        const double aw = std::abs(w);
        for (std::size_t i = 0; i < n1; ++i) {
          const std::complex<double> a = w * e1[i];
          const std::complex<double> c = w * o1[i];
          const double am = aw * std::abs(e1[i]);
          const double cm = aw * std::abs(o1[i]);
          const double ar = a.real(), ai = a.imag(), cr = c.real(), ci = c.imag();
          double* eo_re = acc.eo_re.data() + i * n2;
          double* eo_im = acc.eo_im.data() + i * n2;
          double* oe_re = acc.oe_re.data() + i * n2;
          double* oe_im = acc.oe_im.data() + i * n2;
          double* m_eo = acc.mass_eo.data() + i * n2;
          double* m_oe = acc.mass_oe.data() + i * n2;
          for (std::size_t j = 0; j < n2; ++j) {
            eo_re[j] += ar * o2r[j] - ai * o2i[j];
            eo_im[j] += ar * o2i[j] + ai * o2r[j];
            oe_re[j] += cr * e2r[j] - ci * e2i[j];
            oe_im[j] += cr * e2i[j] + ci * e2r[j];
            m_eo[j] += am * o2a[j];
            m_oe[j] += cm * e2a[j];
          }
        }
      }
    });
    GridSums total;
    total.zero(n1 * n2);
    for (const auto& p : partial) total.add(p);
    return total;
  }

  std::vector<BiphotonAmplitude> eval_direct_grid(const std::vector<double>& x1s, const std::vector<double>& x2s,
                                                  unsigned threads) const {
    const PositionTable t1 = tabulate_positions(x1s);
    const PositionTable t2 = tabulate_positions(x2s);
    const GridSums coarse = sum_level_grid(coarse_, t1, t2, threads);
    const GridSums fine = sum_level_grid(fine_, t1, t2, threads);
    std::vector<BiphotonAmplitude> out(x1s.size() * x2s.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::complex<double> eo_c{coarse.eo_re[i], coarse.eo_im[i]}, oe_c{coarse.oe_re[i], coarse.oe_im[i]};
      const std::complex<double> eo_f{fine.eo_re[i], fine.eo_im[i]}, oe_f{fine.oe_re[i], fine.oe_im[i]};
      const double change = std::max(std::abs(eo_f - eo_c), std::abs(oe_f - oe_c));
      const double allowed = spec_.tolerance * std::max(fine.mass_eo[i], fine.mass_oe[i]);
      if (change > allowed)
        throw QuadratureNonConvergence("numeric amplitude: node doubling changed the amplitude by " +
                                           std::to_string(change) + " (allowed " + std::to_string(allowed) + ")",
                                       change, allowed);
      out[i] = {eo_f, oe_f};
    }
    return out;
  }

  BiphotonAmplitude eval_direct(DetectorPair p) const { return eval_direct_grid({p.x1}, {p.x2}, 1).front(); }

  PhysicalSetup setup_;
  ApertureFunction aperture_;
  QuadratureSpec spec_;
  DetectionKernel kernel_;
  bool moments_ = false;

  std::vector<double> positions_;
  std::vector<std::complex<double>> coeff_e_, coeff_o_;
  std::vector<std::complex<double>> moments_fine_;

  std::vector<KernelElement> elements_;
  Level coarse_, fine_;
};

/// One-shot numeric amplitude. For many detector pairs build a
/// NumericAmplitude once instead.
inline BiphotonAmplitude amplitude_numeric(DetectorPair p, const PhysicalSetup& setup, const ApertureFunction& ap,
                                           const QuadratureSpec& spec,
                                           DetectionKernel kernel = DetectionKernel::fraunhofer) {
  return NumericAmplitude(setup, ap, spec, kernel)(p);
}

/// Least-squares complex scale c minimising sum |target - c * model|^2 over
/// both channels, and the relative L2 residual after applying it.
struct ScaleFit {
  std::complex<double> scale;
  double relative_residual = 0.0;
};

inline ScaleFit fit_global_scale(const std::vector<BiphotonAmplitude>& model,
                                 const std::vector<BiphotonAmplitude>& target) {
  if (model.size() != target.size() || model.empty())
    throw std::invalid_argument("fit_global_scale: sizes differ or are empty");
  std::complex<double> cross{};
  double model_norm = 0.0;
  double target_norm = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    cross += std::conj(model[i].psi_eo) * target[i].psi_eo + std::conj(model[i].psi_oe) * target[i].psi_oe;
    model_norm += std::norm(model[i].psi_eo) + std::norm(model[i].psi_oe);
    target_norm += std::norm(target[i].psi_eo) + std::norm(target[i].psi_oe);
  }
  if (model_norm == 0.0 || target_norm == 0.0) throw std::invalid_argument("fit_global_scale: zero field");
  ScaleFit fit;
  fit.scale = cross / model_norm;
  double residual = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    residual += std::norm(target[i].psi_eo - fit.scale * model[i].psi_eo) +
                std::norm(target[i].psi_oe - fit.scale * model[i].psi_oe);
  }
  fit.relative_residual = std::sqrt(residual / target_norm);
  return fit;
}

}  // namespace antibunch
