#include "hawkon/hawkes_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hawkon/rng.hpp"
#include "hawkon/util.hpp"

namespace hawkon {

long long SpikeRecord::total() const {
  long long s = 0;
  for (const auto& v : times) s += static_cast<long long>(v.size());
  return s;
}

long long SpikeRecord::total_limit() const {
  if (!limit_times) return 0;
  long long s = 0;
  for (const auto& v : *limit_times) s += static_cast<long long>(v.size());
  return s;
}

void SpikeRecord::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  if (!limit_times) {
    out << "neuron_id,time\n";
    for (int i = 0; i < n(); ++i)
      for (double t : times[static_cast<std::size_t>(i)])
        out << i << "," << format_double(t) << "\n";
  } else {
    out << "neuron_id,time,process\n";
    for (int i = 0; i < n(); ++i) {
      const auto& a = times[static_cast<std::size_t>(i)];
      const auto& b = (*limit_times)[static_cast<std::size_t>(i)];
      std::size_t p = 0, q = 0;
      while (p < a.size() || q < b.size()) {
        bool micro = q >= b.size() || (p < a.size() && a[p] <= b[q]);
        if (micro) {
          out << i << "," << format_double(a[p++]) << ",micro\n";
        } else {
          out << i << "," << format_double(b[q++]) << ",limit\n";
        }
      }
    }
  }
  if (!out) throw InvalidArgument("write failed for '" + path + "'");
}

void SpikeRecord::write_summary_csv(const std::string& path) const {
  if (!limit_times) throw InvalidState("summary CSV requires a coupled record");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  out << "neuron_id,count_micro,count_limit,delta\n";
  for (int i = 0; i < n(); ++i)
    out << i << "," << times[static_cast<std::size_t>(i)].size() << ","
        << (*limit_times)[static_cast<std::size_t>(i)].size() << ","
        << delta[static_cast<std::size_t>(i)] << "\n";
  if (!out) throw InvalidArgument("write failed for '" + path + "'");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Ogata-style thinning over the whole population. One pending candidate per
// neuron lives in an indexed heap; per-neuron dominating bounds are refreshed
// lazily (sender plus receivers after each acceptance, or on window expiry).
class Engine {
 public:
  Engine(const InteractionGraph& g, const HawkesModel& m, const IntensityField* field,
         const SimOptions& opt)
      : g_(g), m_(m), field_(field), opt_(opt), heap_(g.n) {
    n_ = g_.n;
    if (n_ == 0) throw InvalidArgument("simulate: empty graph");
    if (!(opt_.T > 0)) throw InvalidArgument("simulate: T must be positive");
    for (double k : g_.kappa)
      if (!(k >= 0)) throw ModelError("simulate: kappa must be nonnegative");
    exp_kernel_ = m_.h.kind() == MemoryKernel::Kind::Exponential;
    if (exp_kernel_) alpha_ = m_.h.alpha();
    h0_ = m_.h.at_zero();

    if (field_) {
      if (field_->horizon() < opt_.T - 1e-9)
        throw InvalidArgument("simulate_coupled: limit field horizon shorter than T");
      cell_.resize(static_cast<std::size_t>(n_));
      for (int i = 0; i < n_; ++i)
        cell_[static_cast<std::size_t>(i)] = field_->cell_of(g_.positions[static_cast<std::size_t>(i)]);
      suffix_.resize(static_cast<std::size_t>(field_->cells()));
    }

    // Look-ahead machinery only matters for kernels that can rise after a
    // spike; monotone families keep H = 1 and never expire a bound.
    h_active_ = !m_.h.nonincreasing();
    if (!h_active_) {
      hfac_ = 1.0;
      delta_ = kInf;
    } else {
      double rate0 = 0;
      for (int i = 0; i < n_; ++i) rate0 += m_.f(m_.u0(0.0, g_.positions[static_cast<std::size_t>(i)]));
      rate0 = std::max(rate0 / n_, 1e-12);
      delta_ = 10.0 / rate0;
      hfac_ = m_.h.domination_factor(delta_);
    }

    w_.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i)
      w_[static_cast<std::size_t>(i)] = g_.kappa[static_cast<std::size_t>(i)] / n_;

    rec_.T = opt_.T;
    rec_.times.assign(static_cast<std::size_t>(n_), {});
    if (field_) {
      rec_.limit_times.emplace(static_cast<std::size_t>(n_));
      rec_.delta.assign(static_cast<std::size_t>(n_), 0);
    }

    syn_.assign(static_cast<std::size_t>(n_), 0.0);
    tsync_.assign(static_cast<std::size_t>(n_), 0.0);
    bound_.assign(static_cast<std::size_t>(n_), 0.0);
    expiry_.assign(static_cast<std::size_t>(n_), kInf);
    rng_.reserve(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) rng_.emplace_back(opt_.seed, static_cast<std::uint64_t>(i));
    for (int i = 0; i < n_; ++i) refresh(i, 0.0);
  }

  SpikeRecord run() {
    const auto& receivers = g_.out_edges();
    long long budget = opt_.max_events;
    while (!heap_.empty()) {
      double s = heap_.top_key();
      if (s > opt_.T) break;
      int i = heap_.top();
      std::size_t ui = static_cast<std::size_t>(i);
      if (s > expiry_[ui]) {
        refresh(i, expiry_[ui]);
        continue;
      }
      ++attempts_;
      double lam_bound = bound_[ui];
      double lam = intensity(i, s);
      double lam_lim = field_ ? field_->at_cell(s, cell_[ui]) : 0.0;
      if (lam > lam_bound * (1 + 1e-9) || lam_lim > lam_bound * (1 + 1e-9)) {
        std::ostringstream os;
        os << "thinning bound violated for neuron " << i << " at t=" << s << ": intensity "
           << std::max(lam, lam_lim) << " exceeds dominating rate " << lam_bound
           << "; required bound >= " << std::max(lam, lam_lim);
        throw NumericalError(os.str());
      }
      double z = lam_bound * rng_[ui].uniform01();
      bool acc_micro = z < lam;
      bool acc_limit = field_ && z < lam_lim;

      if (field_ && acc_micro != acc_limit) ++rec_.delta[ui];
      if (acc_limit) {
        (*rec_.limit_times)[ui].push_back(s);
        if (--budget < 0) throw ExplosionError("simulate: event budget exceeded", s, opt_.max_events);
      }
      if (acc_micro) {
        if (s == last_event_) {
          std::ostringstream os;
          os << "simultaneous jumps of two neurons at t=" << s;
          throw NumericalError(os.str());
        }
        last_event_ = s;
        rec_.times[ui].push_back(s);
        if (--budget < 0) throw ExplosionError("simulate: event budget exceeded", s, opt_.max_events);
        bool self_hit = false;
        for (int k : receivers[ui]) {
          if (k == i) self_hit = true;
          deliver(k, s);
        }
        if (!self_hit) refresh(i, s);
      } else {
        ++rejects_;
        schedule(i, s);  // same bound, fresh exponential gap
      }
      maybe_adapt_window();
    }
    return std::move(rec_);
  }

 private:
  double syn_scan(int i, double t, bool include_equal) const {
    double s = 0;
    std::size_t ui = static_cast<std::size_t>(i);
    for (long e = g_.indptr[ui]; e < g_.indptr[ui + 1]; ++e) {
      const auto& src = rec_.times[static_cast<std::size_t>(g_.indices[static_cast<std::size_t>(e)])];
      for (double u : src) {
        if (u > t || (u == t && !include_equal)) break;
        s += m_.h(t - u);
      }
    }
    return w_[ui] * s;
  }

  // synaptic part of the drive at time t >= tsync, no new inputs in between
  double syn_at(int i, double t) const {
    std::size_t ui = static_cast<std::size_t>(i);
    if (exp_kernel_) return syn_[ui] * std::exp(-alpha_ * (t - tsync_[ui]));
    return syn_scan(i, t, false);
  }

  double intensity(int i, double t) const {
    return m_.f(m_.u0(t, g_.positions[static_cast<std::size_t>(i)]) + syn_at(i, t));
  }

  double field_sup_after(int i, double t) {
    std::size_t c = static_cast<std::size_t>(cell_[static_cast<std::size_t>(i)]);
    auto& suf = suffix_[c];
    if (suf.empty()) {
      suf.resize(static_cast<std::size_t>(field_->knots));
      double m = -kInf;
      for (int k = field_->knots - 1; k >= 0; --k) {
        m = std::max(m, field_->values(k, static_cast<int>(c)));
        suf[static_cast<std::size_t>(k)] = m;
      }
    }
    int k0 = std::min(field_->knots - 1, static_cast<int>(std::ceil(t / field_->dt)));
    return std::max(field_->at_cell(t, static_cast<int>(c)), suf[static_cast<std::size_t>(k0)]);
  }

  // Sync state to time t and recompute the dominating bound and candidate.
  void refresh(int i, double t) {
    std::size_t ui = static_cast<std::size_t>(i);
    if (exp_kernel_) {
      syn_[ui] = syn_[ui] * std::exp(-alpha_ * (t - tsync_[ui]));
    } else {
      syn_[ui] = syn_scan(i, t, true);
    }
    tsync_[ui] = t;
    double x = g_.positions[ui];
    double b;
    if (m_.f.nondecreasing()) {
      b = m_.f(m_.u0.sup_after(t, x) + hfac_ * syn_[ui]);
    } else {
      double u0abs = std::max(std::fabs(m_.u0.sup_after(t, x)), std::fabs(m_.u0.longtime(x)));
      b = m_.f.at_zero() + m_.f.lipschitz_constant() * (u0abs + hfac_ * syn_[ui]);
    }
    if (field_) b = std::max(b, field_sup_after(i, t));
    bound_[ui] = b;
    expiry_[ui] = h_active_ ? t + delta_ : kInf;
    schedule(i, t);
  }

  // New spike of a sender lands on receiver k at time s.
  void deliver(int k, double s) {
    std::size_t uk = static_cast<std::size_t>(k);
    if (exp_kernel_) {
      syn_[uk] = syn_[uk] * std::exp(-alpha_ * (s - tsync_[uk])) + w_[uk] * h0_;
      tsync_[uk] = s;
      // refresh() would decay again from the same instant; reuse its bound logic
      double x = g_.positions[uk];
      double b;
      if (m_.f.nondecreasing()) {
        b = m_.f(m_.u0.sup_after(s, x) + hfac_ * syn_[uk]);
      } else {
        double u0abs = std::max(std::fabs(m_.u0.sup_after(s, x)), std::fabs(m_.u0.longtime(x)));
        b = m_.f.at_zero() + m_.f.lipschitz_constant() * (u0abs + hfac_ * syn_[uk]);
      }
      if (field_) b = std::max(b, field_sup_after(k, s));
      bound_[uk] = b;
      expiry_[uk] = h_active_ ? s + delta_ : kInf;
      schedule(k, s);
    } else {
      refresh(k, s);  // history scan picks the new event up (h(0) weight)
    }
  }

  void schedule(int i, double from) {
    std::size_t ui = static_cast<std::size_t>(i);
    double b = bound_[ui];
    double t = b > 0 ? from + rng_[ui].exponential(b) : kInf;
    heap_.set(i, t);
  }

  void maybe_adapt_window() {
    if (!h_active_ || attempts_ < 256) return;
    if (rejects_ * 10 > attempts_ * 9) {
      delta_ = std::max(delta_ * 0.5, 1e-9 * opt_.T);
      hfac_ = m_.h.domination_factor(delta_);
    }
    attempts_ = rejects_ = 0;
  }

  const InteractionGraph& g_;
  const HawkesModel& m_;
  const IntensityField* field_;
  SimOptions opt_;
  IndexedMinHeap heap_;
  int n_ = 0;
  bool exp_kernel_ = false, h_active_ = false;
  double alpha_ = 0, h0_ = 0, hfac_ = 1, delta_ = kInf;
  std::vector<double> w_, syn_, tsync_, bound_, expiry_;
  std::vector<int> cell_;
  std::vector<std::vector<double>> suffix_;
  std::vector<RngStream> rng_;
  SpikeRecord rec_;
  long long attempts_ = 0, rejects_ = 0;
  double last_event_ = -kInf;
};

}  // namespace

SpikeRecord simulate(const InteractionGraph& graph, const HawkesModel& model,
                     const SimOptions& opts) {
  return Engine(graph, model, nullptr, opts).run();
}

SpikeRecord simulate_coupled(const InteractionGraph& graph, const HawkesModel& model,
                             const IntensityField& limit, const SimOptions& opts) {
  return Engine(graph, model, &limit, opts).run();
}

IntensityField spatial_profile(const SpikeRecord& record, const InteractionGraph& graph,
                               const HawkesModel& model, double T, int knots) {
  if (knots < 2) throw InvalidArgument("spatial_profile: need at least 2 knots");
  if (record.n() != graph.n) throw InvalidArgument("spatial_profile: record/graph size mismatch");
  int n = graph.n;
  double dt = T / (knots - 1);
  bool exp_kernel = model.h.kind() == MemoryKernel::Kind::Exponential;
  double alpha = exp_kernel ? model.h.alpha() : 0.0;
  double h0 = model.h.at_zero();

  Eigen::MatrixXd u(knots, n);
  std::vector<double> inputs;
  for (int i = 0; i < n; ++i) {
    std::size_t ui = static_cast<std::size_t>(i);
    inputs.clear();
    for (long e = graph.indptr[ui]; e < graph.indptr[ui + 1]; ++e) {
      const auto& src = record.times[static_cast<std::size_t>(graph.indices[static_cast<std::size_t>(e)])];
      inputs.insert(inputs.end(), src.begin(), src.end());
    }
    std::sort(inputs.begin(), inputs.end());
    double w = graph.kappa[ui] / n;
    double x = graph.positions[ui];
    if (exp_kernel) {
      double s = 0, prev = 0;
      std::size_t next = 0;
      for (int k = 0; k < knots; ++k) {
        double t = k * dt;
        while (next < inputs.size() && inputs[next] < t) {
          s = s * std::exp(-alpha * (inputs[next] - prev)) + h0;
          prev = inputs[next];
          ++next;
        }
        u(k, i) = model.u0(t, x) + w * s * std::exp(-alpha * (t - prev));
      }
    } else {
      for (int k = 0; k < knots; ++k) {
        double t = k * dt;
        double s = 0;
        for (double v : inputs) {
          if (v >= t) break;
          s += model.h(t - v);
        }
        u(k, i) = model.u0(t, x) + w * s;
      }
    }
  }

  IntensityField field;
  field.dt = dt;
  field.knots = knots;
  field.xs = model.nu.grid(n);
  field.nu = model.nu;
  field.values = std::move(u);
  field.meta["kind"] = "spatial_profile";
  return field;
}

std::vector<long long> coupling_sup(const SpikeRecord& record) {
  if (!record.limit_times) throw InvalidState("coupling_sup: record is not coupled");
  std::vector<long long> out(static_cast<std::size_t>(record.n()), 0);
  for (int i = 0; i < record.n(); ++i) {
    const auto& a = record.times[static_cast<std::size_t>(i)];
    const auto& b = (*record.limit_times)[static_cast<std::size_t>(i)];
    std::size_t p = 0, q = 0;
    long long diff = 0, worst = 0;
    while (p < a.size() || q < b.size()) {
      double ta = p < a.size() ? a[p] : kInf;
      double tb = q < b.size() ? b[q] : kInf;
      if (ta < tb) {
        ++diff;
        ++p;
      } else if (tb < ta) {
        --diff;
        ++q;
      } else {
        ++p;
        ++q;  // shared jump cancels
      }
      worst = std::max(worst, std::llabs(diff));
    }
    out[static_cast<std::size_t>(i)] = worst;
  }
  return out;
}

}  // namespace hawkon
