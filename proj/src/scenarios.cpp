#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <mutex>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "resilience/bounds.hpp"
#include "resilience/control.hpp"
#include "resilience/detection.hpp"
#include "resilience/experiments.hpp"
#include "resilience/fermion.hpp"
#include "resilience/perturbation.hpp"
#include "resilience/report.hpp"
#include "resilience/rng.hpp"
#include "resilience/state.hpp"

namespace resilience {

namespace {

constexpr double kNormTol = 1e-9;
constexpr std::uint64_t kHaarStream = 0x4861617200000000ULL;

using json = nlohmann::json;

struct Run {
  const ScenarioConfig& cfg;
  const RunOptions& opts;
  OutputSink sink;
  std::vector<std::string> violations;
  json summary = json::object();

  void violation(std::string msg) { violations.push_back(std::move(msg)); }
  void write_table(const std::string& name, const CsvTable& t) { sink.write(name, t.render()); }
};

// ---- shared helpers ---------------------------------------------------------

std::string hexf(double v) { return fmt::format("{:a}", v); }

std::string operator_key(const OperatorSum& op) {
  std::string key = fmt::format("n{}", op.n_sites());
  const OperatorSum s = op.simplified();
  for (const Term& t : s.terms()) {
    key += fmt::format("|{:x}:{:x}:{}:{}:{}", t.pauli.x_bits(), t.pauli.z_bits(),
                       hexf(t.coefficient.real()), hexf(t.coefficient.imag()),
                       envelope_key(t.envelope));
  }
  return key;
}

// Spectral decompositions are the expensive part of every scenario and the
// same Hamiltonian recurs across scenarios, so they are shared per process.
std::mutex g_cache_mutex;
std::map<std::string, std::shared_ptr<const SpectralEvolver>> g_evolvers;

std::shared_ptr<const SpectralEvolver> cached_evolver(const std::string& key,
                                                      const std::function<SpectralEvolver()>& build) {
  {
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    if (auto it = g_evolvers.find(key); it != g_evolvers.end()) return it->second;
  }
  auto ev = std::make_shared<const SpectralEvolver>(build());
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  return g_evolvers.emplace(key, ev).first->second;
}

std::shared_ptr<const SpectralEvolver> dense_evolver(const OperatorSum& h) {
  return cached_evolver("dense/" + operator_key(h), [&] { return SpectralEvolver(to_dense(h)); });
}

QuadratureOptions quad_opts(const ScenarioConfig& cfg) {
  QuadratureOptions o;
  o.rel_tol = cfg.number("quad_rel_tol");
  o.max_level = static_cast<int>(cfg.integer("quad_max_level"));
  return o;
}

std::size_t positive_count(const ScenarioConfig& cfg, const std::string& key) {
  const std::int64_t v = cfg.integer(key);
  if (v <= 0) throw ConfigError({fmt::format("'{}' must be positive", key)});
  return static_cast<std::size_t>(v);
}

double positive_number(const ScenarioConfig& cfg, const std::string& key) {
  const double v = cfg.number(key);
  if (!(v > 0.0)) throw ConfigError({fmt::format("'{}' must be positive", key)});
  return v;
}

std::size_t segment_count(double t_final, double dt, const std::string& what) {
  const double r = t_final / dt;
  const long k = std::lround(r);
  if (k < 1 || std::abs(r - static_cast<double>(k)) > 1e-9 * r) {
    throw ConfigError({fmt::format("{}: t_final must be a whole number of segments", what)});
  }
  return static_cast<std::size_t>(k);
}

// File-name friendly form of a label.
std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') out += c;
    else if (c == '+') out += 'p';
    else if (c == '-') out += 'm';
    else if (c == '/' || c == ':' || c == ',' || c == '.') out += '_';
  }
  return out;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

void check_norm(Run& run, const CVector& v, const std::string& where) {
  const double dev = std::abs(v.norm() - 1.0);
  if (dev >= kNormTol) run.violation(fmt::format("{}: state norm deviates from 1 by {:.3e}", where, dev));
}

struct NamedState {
  std::string label;
  CVector amps;
};

NamedState qubit_state(const std::string& spec, std::size_t n, std::uint64_t seed) {
  if (spec == "zero") return {spec, StateVector::basis_state(n, 0).amplitudes()};
  if (spec == "plus") return {spec, StateVector::plus_state(n).amplitudes()};
  if (spec.rfind("haar:", 0) == 0) {
    const std::string idx = spec.substr(5);
    if (idx.empty() || !std::all_of(idx.begin(), idx.end(), ::isdigit)) {
      throw ConfigError({"bad state '" + spec + "': expected haar:<k>"});
    }
    Rng rng(seed, kHaarStream + std::stoull(idx));
    return {spec, haar_state(std::size_t{1} << n, rng)};
  }
  if (spec.rfind("product:", 0) == 0) {
    const std::string p = spec.substr(8);
    if (p.size() != n) throw ConfigError({"bad state '" + spec + "': need one symbol per site"});
    return {spec, StateVector::product_state(p).amplitudes()};
  }
  throw ConfigError({"unknown state '" + spec + "' (zero, plus, haar:k, product:<0+1->)"});
}

std::vector<std::pair<std::size_t, std::size_t>> parse_pairs(const std::vector<std::string>& items,
                                                             std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const std::string& it : items) {
    const std::size_t dash = it.find('-');
    std::size_t a = 0, b = 0;
    try {
      if (dash == std::string::npos) throw std::invalid_argument(it);
      a = std::stoul(it.substr(0, dash));
      b = std::stoul(it.substr(dash + 1));
    } catch (const std::exception&) {
      throw ConfigError({"entropy pair '" + it + "' is not of the form i-j"});
    }
    if (a < 1 || b < 1 || a > n || b > n || a == b) {
      throw ConfigError({fmt::format("entropy pair '{}' outside sites 1..{}", it, n)});
    }
    out.emplace_back(a - 1, b - 1);
  }
  return out;
}

double bits(const PartialTrace& pt, const CVector& psi) { return entropy(pt(psi), EntropyUnits::Bits); }

// ---- QIMF scenarios ---------------------------------------------------------

struct QimfSystem {
  std::size_t n;
  OperatorSum h0;
  std::vector<LatticeEdge> edges;
  bool dense;  // small enough for a cached spectral decomposition
};

QimfSystem qimf_system(const ScenarioConfig& cfg, bool two_d) {
  const double hx = cfg.number("h_x"), hy = cfg.number("h_y"), j = cfg.number("coupling_j");
  if (two_d) {
    const std::size_t rows = positive_count(cfg, "rows"), cols = positive_count(cfg, "cols");
    if (rows * cols < 2 || rows * cols > kDenseCap) {
      throw ConfigError({fmt::format("lattice must hold 2..{} sites", kDenseCap)});
    }
    return {rows * cols, build_qimf_2d(rows, cols, hx, hy, j), grid_edges(rows, cols), rows * cols <= 10};
  }
  const std::size_t n = positive_count(cfg, "n_sites");
  if (n < 2 || n > kDenseCap) throw ConfigError({fmt::format("n_sites must be in 2..{}", kDenseCap)});
  return {n, build_qimf_1d(n, hx, hy, j), grid_edges(1, n), n <= 10};
}

PerturbationModel qimf_model(const ScenarioConfig& cfg, const QimfSystem& sys, const std::string& which) {
  const NoiseScale scale = cfg.get("noise_scale") == "stddev" ? NoiseScale::StdDev : NoiseScale::Variance;
  const double strength = cfg.number("noise_strength");
  if (strength < 0.0 || cfg.number("eta") < 0.0) throw ConfigError({"noise strengths must be non-negative"});
  const double sigma = (which == "imperfection") ? 0.0 : sigma_from(strength, scale);
  const double eta = (which == "disorder") ? 0.0 : cfg.number("eta");
  return qimf_noise_on_edges(sys.n, sys.edges, sigma, eta);
}

json realization_json(const PerturbationModel& model, const PerturbationRealization& r,
                      const ScenarioConfig& cfg) {
  json j;
  j["seed"] = r.seed;
  j["sample_index"] = 0;
  j["deltas"] = r.deltas;
  j["sigma"] = model.disorder.empty() ? 0.0 : model.disorder.front().sigma;
  j["eta"] = model.imperfection.empty() ? 0.0 : model.imperfection.front().eta;
  j["noise_scale"] = cfg.get("noise_scale");
  j["h_pert"] = r.h_pert.simplified().str();
  return j;
}

// Ideal and noisy evolutions of one initial state.
struct QimfPair {
  std::unique_ptr<Trajectory> ideal;
  std::unique_ptr<Trajectory> noisy;
};

QimfPair qimf_pair(const QimfSystem& sys, const OperatorSum& h, const CVector& psi0) {
  QimfPair p;
  if (sys.dense) {
    p.ideal = std::make_unique<SpectralTrajectory>(dense_evolver(sys.h0), StateVector::full(psi0));
    p.noisy = std::make_unique<SpectralTrajectory>(dense_evolver(h), StateVector::full(psi0));
  } else {
    p.ideal = std::make_unique<SparseTrajectory>(sys.h0, psi0);
    p.noisy = std::make_unique<SparseTrajectory>(h, psi0);
  }
  return p;
}

void record_ladder_violations(Run& run, const std::string& file, const std::vector<LadderViolation>& v) {
  for (const LadderViolation& l : v) {
    run.violation(fmt::format("{} row {}: {} fails ({:.6e} > {:.6e})", file, l.row, l.relation, l.lhs, l.rhs));
  }
}

struct QimfOutputs {
  bool longtime = false;
  bool segment = false;
};

void run_qimf(Run& run, bool two_d, QimfOutputs what) {
  const ScenarioConfig& cfg = run.cfg;
  const QimfSystem sys = qimf_system(cfg, two_d);
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  const double t_final = positive_number(cfg, "t_final");
  std::size_t intervals;
  if (cfg.values().count("segment_dt")) {
    intervals = segment_count(t_final, positive_number(cfg, "segment_dt"), "segment_dt");
  } else {
    intervals = positive_count(cfg, "intervals");
  }
  const TimeGrid grid = TimeGrid::uniform(t_final, intervals);
  const double seg_dt = t_final / static_cast<double>(intervals);
  const QuadratureOptions qo = quad_opts(cfg);
  const double slack = cfg.number("ladder_slack");
  const bool noisy_traj = cfg.get("trajectory") == "noisy";
  const auto pairs = parse_pairs(cfg.list("entropy_pairs"), sys.n);
  std::vector<PartialTrace> traces;
  std::vector<std::string> ent_labels;
  for (auto [a, b] : pairs) {
    traces.emplace_back(sys.n, std::vector<std::size_t>{std::min(a, b), std::max(a, b)});
    ent_labels.push_back(fmt::format("S_{}_{}", a + 1, b + 1));
  }
  const double crossover_tol = cfg.values().count("crossover_rel_tol") ? cfg.number("crossover_rel_tol") : 0.05;

  std::vector<NamedState> states;
  for (const std::string& s : cfg.list("states")) states.push_back(qubit_state(s, sys.n, seed));
  const std::vector<std::string> models = cfg.list("noise_models");

  json runs = json::array();
  for (const std::string& model_name : models) {
    const PerturbationModel model = qimf_model(cfg, sys, model_name);
    const PerturbationRealization real = sample(model, seed, 0);
    const OperatorSum hp = real.h_pert.simplified();
    const OperatorSum h = (sys.h0 + hp).simplified();
    const Baselines unit = baseline_bounds(hp, 1.0);
    for (const NamedState& st : states) {
      const std::string tag = fmt::format("{}_{}", model_name, slug(st.label));
      QimfPair traj = qimf_pair(sys, h, st.amps);
      const Trajectory& bound_traj = noisy_traj ? *traj.noisy : *traj.ideal;
      const LadderSeries series = ladder_series(hp, bound_traj, grid, qo);

      std::vector<CVector> ideal_states, noisy_states, bound_states;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid.points[i];
        ideal_states.push_back(traj.ideal->state(t));
        noisy_states.push_back(traj.noisy->state(t));
        bound_states.push_back(noisy_traj ? noisy_states.back() : ideal_states.back());
        check_norm(run, ideal_states.back(), fmt::format("{} ideal t={}", tag, t));
        check_norm(run, noisy_states.back(), fmt::format("{} noisy t={}", tag, t));
      }
      std::vector<std::vector<double>> ent(traces.size());
      for (std::size_t p = 0; p < traces.size(); ++p) {
        for (const CVector& v : bound_states) ent[p].push_back(bits(traces[p], v));
      }
      json meta;
      meta["noise_model"] = model_name;
      meta["realization"] = realization_json(model, real, cfg);
      meta["trajectory"] = noisy_traj ? "noisy" : "ideal";
      meta["quadrature"] = {{"rule", "trapezoid"}, {"rel_tol", qo.rel_tol}, {"level", series.quadrature_level}};
      meta["rng"] = Rng::identity();
      meta["frobenius_norm"] = unit.haar;
      meta["spectral_norm"] = unit.worst;
      json entry = {{"model", model_name}, {"state", st.label}, {"frobenius", unit.haar},
                    {"spectral", unit.worst}, {"quadrature_level", series.quadrature_level}};

      if (what.longtime) {
        BoundReport rep;
        rep.scenario = cfg.scenario();
        rep.state_label = st.label;
        rep.seed = seed;
        rep.t = grid.points;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          rep.exact_error.push_back(exact_error(ideal_states[i], noisy_states[i]));
          rep.frobenius_bound.push_back(grid.points[i] * unit.haar);
          rep.spectral_bound.push_back(grid.points[i] * unit.worst);
        }
        rep.integral_bound = series.integral;
        rep.entanglement_bound = series.entanglement;
        rep.crossover_c = estimate_crossover(series.expectation, series.frobenius, grid, crossover_tol);
        rep.split_bound = split_bound(series, grid, rep.crossover_c);
        rep.entropy_labels = ent_labels;
        rep.entropy_bits = ent;
        rep.metadata = meta;
        rep.metadata["crossover_rel_tol"] = crossover_tol;
        const std::string file = "ladder_" + tag + ".csv";
        run.write_table(file, rep.to_csv(two_d ? "2D QIMF long-time error: exact error and bound ladder"
                                               : "1D QIMF long-time error (Fig. 2a): exact error and bound ladder"));
        run.sink.write_json("ladder_" + tag + ".json", rep.sidecar());
        record_ladder_violations(run, file, rep.check_ladder(slack));
        for (std::size_t i = 0; i < grid.size(); ++i) {
          if (!within_slack(rep.exact_error[i], rep.split_bound[i], slack)) {
            run.violation(fmt::format("{} row {}: split_bound below exact_error ({:.6e} < {:.6e})", file, i,
                                      rep.split_bound[i], rep.exact_error[i]));
          }
        }
        double rmin = INFINITY, rmax = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          if (grid.points[i] > rep.crossover_c && rep.frobenius_bound[i] > 0.0) {
            const double r = rep.exact_error[i] / rep.frobenius_bound[i];
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
          }
        }
        entry["crossover_c"] = rep.crossover_c;
        entry["exact_final"] = rep.exact_error.back();
        entry["integral_final"] = rep.integral_bound.back();
        entry["entanglement_final"] = rep.entanglement_bound.back();
        entry["split_final"] = rep.split_bound.back();
        entry["frobenius_final"] = rep.frobenius_bound.back();
        entry["spectral_final"] = rep.spectral_bound.back();
        entry["ratio_after_c_min"] = std::isfinite(rmin) ? rmin : 0.0;
        entry["ratio_after_c_max"] = rmax;
        entry["ladder_file"] = file;
      }

      if (what.segment) {
        CsvTable tab;
        tab.comments.push_back(two_d ? "2D QIMF one-segment error with two-qubit entropies (bits)"
                                     : "1D QIMF one-segment error (Fig. 2b) with two-qubit entropies (bits)");
        tab.comments.push_back(fmt::format("scenario={} state={} seed={} model={} segment_dt={}", cfg.scenario(),
                                           st.label, seed, model_name, format_real(seg_dt)));
        tab.columns = {"t", "one_segment_error", "segment_integral_bound", "segment_entanglement_bound",
                       "segment_frobenius", "segment_spectral"};
        for (const auto& l : ent_labels) tab.columns.push_back(l);
        std::unique_ptr<SpectralEvolver> dummy;
        CMatrix u0, u;
        if (sys.dense) {
          u0 = dense_evolver(sys.h0)->propagator(seg_dt);
          u = dense_evolver(h)->propagator(seg_dt);
        }
        const std::string file = "segment_" + tag + ".csv";
        std::vector<double> errs;
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
          const CVector& start = bound_states[k];
          const double err = sys.dense ? exact_error(u0, u, start)
                                       : one_segment_error(sys.h0, hp, start, seg_dt);
          const double ib = series.integral[k + 1] - series.integral[k];
          const double eb = series.entanglement[k + 1] - series.entanglement[k];
          std::vector<double> row{grid.points[k], err, ib, eb, seg_dt * unit.haar, seg_dt * unit.worst};
          for (const auto& e : ent) row.push_back(e[k]);
          tab.add_row(row);
          errs.push_back(err);
          if (!within_slack(err, ib, slack)) {
            run.violation(fmt::format("{} row {}: one_segment_error<=segment_integral_bound fails", file, k));
          }
          if (!within_slack(ib, eb, slack)) {
            run.violation(fmt::format("{} row {}: segment_integral<=segment_entanglement fails", file, k));
          }
        }
        run.write_table(file, tab);
        json side = meta;
        side["scenario"] = cfg.scenario();
        side["state"] = st.label;
        side["segment_dt"] = seg_dt;
        side["columns"] = tab.columns;
        run.sink.write_json("segment_" + tag + ".json", side);
        entry["segment_file"] = file;
        entry["segment_error_max"] = errs.empty() ? 0.0 : *std::max_element(errs.begin(), errs.end());
        entry["segment_error_mean"] =
            errs.empty() ? 0.0 : std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
      }
      runs.push_back(entry);
    }
  }
  run.summary["runs"] = runs;
}

// ---- Fermi-Hubbard scenarios ------------------------------------------------

struct HubbardSegments {
  std::vector<double> t, error, integral, mean_entropy;
  std::vector<std::vector<double>> entropy;
  double frobenius, spectral;
};

HubbardSegments hubbard_segments(Run& run, const std::string& tag, const OperatorSum& h0,
                                 const OperatorSum& hp, std::size_t L, const std::vector<Occupation>& occ,
                                 double t_final, double seg_dt, std::size_t entropy_site,
                                 const std::vector<std::size_t>& offsets, const std::string& caption) {
  const ScenarioConfig& cfg = run.cfg;
  std::size_t n_up = 0, n_down = 0;
  for (const Occupation& o : occ) {
    if (o.site >= L) throw ConfigError({fmt::format("occupation site {} outside 1..{}", o.site + 1, L)});
    for (Spin s : o.spins) (s == Spin::Up ? n_up : n_down)++;
  }
  auto basis = std::make_shared<const SectorBasis>(L, n_up, n_down);
  const std::uint64_t mask = occupation_mask(occ, L);
  const auto idx = basis->index_of(mask);
  if (!idx) throw std::logic_error("occupation mask outside its own sector");
  CVector amps = CVector::Zero(static_cast<Eigen::Index>(basis->dimension()));
  amps(static_cast<Eigen::Index>(*idx)) = 1.0;

  const RSparse ideal = project_to_sector_sparse(h0, *basis);
  const RSparse noisy = project_to_sector_sparse((h0 + hp).simplified(), *basis);
  // hp is diagonal in the occupation basis, so ||hp psi|| is read off in the sector
  const CVector hp_diag = RVector(project_to_sector_sparse(hp, *basis).diagonal()).cast<cplx>();
  const SectorTrajectory traj(ideal, basis, amps);
  const std::size_t K = segment_count(t_final, seg_dt, "segment_dt");
  const TimeGrid grid = TimeGrid::uniform(t_final, K);
  const QuadratureOptions qo = quad_opts(cfg);
  const CumulativeIntegrals ci = integrate_on_grid(
      [&](double t) {
        return std::vector<double>{hp_diag.cwiseProduct(traj.sector_state(t)).norm()};
      },
      1, grid, qo);
  const std::vector<double>& cum = ci.values[0];
  const Baselines unit = baseline_bounds(hp, 1.0);

  std::vector<PartialTrace> traces;
  std::vector<std::string> labels;
  for (std::size_t m : offsets) {
    const std::size_t a = entropy_site, b = (entropy_site + m) % L;
    if (a == b) throw ConfigError({"entropy offset maps a site onto itself"});
    std::vector<std::size_t> modes = site_modes({a, b});
    std::sort(modes.begin(), modes.end());
    traces.emplace_back(2 * L, modes);
    labels.push_back(fmt::format("S_{}_{}", a + 1, b + 1));
  }

  HubbardSegments out;
  out.entropy.resize(traces.size());
  out.frobenius = unit.haar;
  out.spectral = unit.worst;
  CsvTable tab;
  tab.comments.push_back(caption);
  tab.comments.push_back(fmt::format("scenario={} state={} L={} n_up={} n_down={} sector_dim={} segment_dt={}",
                                     cfg.scenario(), tag, L, n_up, n_down, basis->dimension(), format_real(seg_dt)));
  tab.columns = {"t", "one_segment_error", "segment_integral_bound", "segment_frobenius", "segment_spectral"};
  for (const auto& l : labels) tab.columns.push_back(l);
  const std::string file = "segment_" + tag + ".csv";
  const double slack = cfg.number("ladder_slack");
  for (std::size_t k = 0; k < K; ++k) {
    const double t = grid.points[k];
    const CVector sec = traj.sector_state(t);
    check_norm(run, sec, fmt::format("{} t={}", tag, t));
    const double err = one_segment_error(ideal, noisy, sec, seg_dt);
    const double ib = cum[k + 1] - cum[k];
    const CVector full = sector_to_full(sec, *basis);
    std::vector<double> row{t, err, ib, seg_dt * unit.haar, seg_dt * unit.worst};
    double mean = 0.0;
    for (std::size_t p = 0; p < traces.size(); ++p) {
      const double s = bits(traces[p], full);
      out.entropy[p].push_back(s);
      row.push_back(s);
      mean += s / static_cast<double>(traces.size());
    }
    tab.add_row(row);
    out.t.push_back(t);
    out.error.push_back(err);
    out.integral.push_back(ib);
    out.mean_entropy.push_back(mean);
    if (!within_slack(err, ib, slack)) {
      run.violation(fmt::format("{} row {}: one_segment_error<=segment_integral_bound fails ({:.6e} > {:.6e})",
                                file, k, err, ib));
    }
    if (!within_slack(unit.haar, unit.worst, 1e-12)) {
      run.violation(fmt::format("{} row {}: frobenius<=spectral fails", file, k));
    }
  }
  run.write_table(file, tab);
  json side;
  side["scenario"] = cfg.scenario();
  side["state"] = tag;
  side["sector"] = {{"L", L}, {"n_up", n_up}, {"n_down", n_down}, {"dimension", basis->dimension()}};
  side["frobenius_norm"] = unit.haar;
  side["spectral_norm"] = unit.worst;
  side["quadrature_level"] = ci.level;
  side["columns"] = tab.columns;
  side["entanglement_column"] = "omitted: the support expansion of H_pert^2 on 2L qubits is too large";
  run.sink.write_json("segment_" + tag + ".json", side);
  return out;
}

json hubbard_entry(const HubbardSegments& s, double seg_dt) {
  const auto max_it = std::max_element(s.mean_entropy.begin(), s.mean_entropy.end());
  const std::size_t at = static_cast<std::size_t>(max_it - s.mean_entropy.begin());
  double max_pair = 0.0;
  for (const auto& e : s.entropy) max_pair = std::max(max_pair, *std::max_element(e.begin(), e.end()));
  return {{"pearson_error_vs_mean_entropy", pearson(s.error, s.mean_entropy)},
          {"max_pair_entropy_bits", max_pair},
          {"max_mean_entropy_bits", *max_it},
          {"error_at_max_mean_entropy", s.error[at]},
          {"frobenius_level", seg_dt * s.frobenius},
          {"spectral_level", seg_dt * s.spectral},
          {"error_max", *std::max_element(s.error.begin(), s.error.end())},
          {"error_min", *std::min_element(s.error.begin(), s.error.end())}};
}

std::vector<std::size_t> offsets_from(const ScenarioConfig& cfg, std::size_t L) {
  std::vector<std::size_t> out;
  for (double d : cfg.numbers("entropy_offsets")) {
    if (d < 1 || d >= static_cast<double>(L) || d != std::floor(d)) {
      throw ConfigError({fmt::format("entropy offset {} outside 1..{}", d, L - 1)});
    }
    out.push_back(static_cast<std::size_t>(d));
  }
  return out;
}

std::size_t entropy_site_from(const ScenarioConfig& cfg, std::size_t L) {
  const std::int64_t j = cfg.integer("entropy_site");
  if (j < 1 || j > static_cast<std::int64_t>(L)) throw ConfigError({"entropy_site outside the lattice"});
  return static_cast<std::size_t>(j - 1);
}

void run_fig3(Run& run) {
  const ScenarioConfig& cfg = run.cfg;
  const std::size_t L = positive_count(cfg, "n_sites");
  if (L < 2 || 2 * L > 20) throw ConfigError({"n_sites must be in 2..10"});
  const Boundary bc = cfg.get("boundary") == "open" ? Boundary::Open : Boundary::Periodic;
  const OperatorSum h0 = build_hubbard(L, cfg.number("coulomb_v"), cfg.number("hopping"), bc);
  const OperatorSum hp = hubbard_perturbation(L, cfg.number("delta"));
  const double seg_dt = positive_number(cfg, "segment_dt");
  const auto offsets = offsets_from(cfg, L);
  const std::size_t j = entropy_site_from(cfg, L);
  json runs = json::array();
  const auto states = cfg.list("states");
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto occ = parse_occupations(states[i]);
    const std::string tag = fmt::format("{}", static_cast<char>('a' + i));
    const HubbardSegments s =
        hubbard_segments(run, tag, h0, hp, L, occ, positive_number(cfg, "t_final"), seg_dt, j, offsets,
                         "Fermi-Hubbard one-segment error (Fig. 3) with two-site entropies (bits)");
    json e = hubbard_entry(s, seg_dt);
    e["panel"] = tag;
    e["state"] = states[i];
    e["file"] = "segment_" + tag + ".csv";
    runs.push_back(e);
  }
  run.summary["runs"] = runs;
}

void run_fig7(Run& run) {
  const ScenarioConfig& cfg = run.cfg;
  const std::size_t L = positive_count(cfg, "n_sites");
  if (L < 2 || 2 * L > 20) throw ConfigError({"n_sites must be in 2..10"});
  const Boundary bc = cfg.get("boundary") == "open" ? Boundary::Open : Boundary::Periodic;
  const double V = cfg.number("coulomb_v"), hop = cfg.number("hopping");
  const OperatorSum hp = hubbard_perturbation(L, cfg.number("delta"));
  const auto occ = parse_occupations(cfg.get("state"));
  const double seg_dt = positive_number(cfg, "segment_dt");
  const auto offsets = offsets_from(cfg, L);
  const std::size_t j = entropy_site_from(cfg, L);
  json runs = json::array();
  for (const std::string& lat : cfg.list("lattices")) {
    std::vector<Edge> edges;
    if (lat == "chain") {
      edges = chain_edges(L, bc);
    } else {
      const std::size_t rows = positive_count(cfg, "ladder_rows");
      if (L % rows != 0) throw ConfigError({"ladder_rows must divide n_sites"});
      edges = ladder_edges(rows, L / rows, bc);
    }
    const OperatorSum h0 = build_hubbard_on_edges(L, edges, V, hop);
    const HubbardSegments s = hubbard_segments(
        run, lat, h0, hp, L, occ, positive_number(cfg, "t_final"), seg_dt, j, offsets,
        lat == "chain" ? "Fermi-Hubbard chain long-time one-segment error (Fig. 7a)"
                       : "Fermi-Hubbard ladder long-time one-segment error (Fig. 7b)");
    json e = hubbard_entry(s, seg_dt);
    e["lattice"] = lat;
    e["bonds"] = edges.size();
    e["file"] = "segment_" + lat + ".csv";
    runs.push_back(e);
  }
  run.summary["runs"] = runs;
}

// ---- cross terms ------------------------------------------------------------

void run_fig4(Run& run) {
  const ScenarioConfig& cfg = run.cfg;
  const QimfSystem sys = qimf_system(cfg, false);
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  const double t = cfg.number("t_eval");
  if (t < 0.0) throw ConfigError({"t_eval must be non-negative"});
  const double width = positive_number(cfg, "bin_width");
  const double near = positive_number(cfg, "near_zero");
  const PerturbationModel model = qimf_model(cfg, sys, "both");
  const PerturbationRealization real = sample(model, seed, 0);
  const std::vector<PauliString> terms = structure_terms(real.h_pert.simplified());
  json runs = json::array();
  for (const std::string& spec : cfg.list("states")) {
    const NamedState st = qubit_state(spec, sys.n, seed);
    const CVector psi = SpectralTrajectory(dense_evolver(sys.h0), StateVector::full(st.amps)).state(t);
    check_norm(run, psi, spec);
    const auto records = cross_term_expectations(terms, psi);
    const Histogram hist = histogram(records, width);
    if (hist.total() != records.size()) run.violation(spec + ": histogram counts do not partition the records");
    const std::string tag = slug(spec);
    run.write_table("crossterms_" + tag + ".csv",
                    cross_terms_csv(records, fmt::format("Hermitian cross terms (Fig. 4) at t={} state={} seed={}",
                                                         format_real(t), spec, seed)));
    run.write_table("histogram_" + tag + ".csv",
                    histogram_csv(hist, fmt::format("cross-term histogram (Fig. 4) width={} state={}",
                                                    format_real(width), spec)));
    std::size_t near_count = 0;
    for (const auto& r : records) near_count += std::abs(r.value) <= near ? 1 : 0;
    runs.push_back({{"state", spec}, {"pairs", records.size()}, {"near_zero_pairs", near_count},
                    {"mass_outside", mass_outside(records, near)}});
  }
  run.summary["runs"] = runs;
  run.summary["terms"] = terms.size();
}

// ---- control ------------------------------------------------------------------

EvolutionConfig evolution_cfg(const ScenarioConfig& cfg) {
  EvolutionConfig e;
  e.dt = positive_number(cfg, "ev_dt");
  e.tolerance = positive_number(cfg, "ev_tolerance");
  e.dt_floor = positive_number(cfg, "ev_dt_floor");
  e.order = cfg.get("stepper") == "midpoint" ? StepperOrder::Midpoint : StepperOrder::FourthOrder;
  e.method = EvolutionMethod::Eigendecomposition;
  return e;
}

std::vector<double> temperatures_from(const ScenarioConfig& cfg) {
  const std::vector<double> inv = cfg.numbers("inverse_temperatures");
  if (inv.empty()) return GibbsSweep::default_temperatures();
  std::vector<double> out;
  for (double b : inv) {
    if (!(b > 0.0)) throw ConfigError({"inverse temperatures must be positive"});
    out.push_back(1.0 / b);
  }
  std::sort(out.begin(), out.end());
  return out;
}

json sweep_checks(Run& run, const std::string& file, const std::vector<SweepRow>& rows) {
  std::vector<double> s, e;
  for (const SweepRow& r : rows) {
    s.push_back(r.entropy_bits);
    e.push_back(r.error);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (s[i] < s[i - 1] - 1e-9) monotone = false;
  }
  const double rho = spearman(s, e);
  if (!monotone) run.violation(file + ": entropy decreases with temperature");
  if (!(rho < 0.0)) run.violation(fmt::format("{}: Spearman(entropy, error) = {:.4f} is not negative", file, rho));
  return {{"file", file},
          {"entropy_monotone", monotone},
          {"spearman", rho},
          {"max_entropy_bits", *std::max_element(s.begin(), s.end())},
          {"min_entropy_bits", *std::min_element(s.begin(), s.end())},
          {"error_lowest_temperature", e.front()},
          {"error_highest_temperature", e.back()}};
}

CsvTable sweep_table(const std::vector<SweepRow>& rows, const std::string& caption) {
  CsvTable t;
  t.comments.push_back(caption);
  t.columns = {"temperature", "entropy_bits", "error"};
  for (const SweepRow& r : rows) t.add_row(std::vector<double>{r.temperature, r.entropy_bits, r.error});
  return t;
}

void run_fig5(Run& run) {
  const ScenarioConfig& cfg = run.cfg;
  const UnitConvention units{cfg.flag("angular")};
  const std::string path = cfg.get("pulse_table").empty() ? default_pulse_table_path() : cfg.get("pulse_table");
  const std::vector<PulseParams> table = load_pulse_table(path, units);
  const Lattice lat{positive_count(cfg, "lattice_rows"), positive_count(cfg, "lattice_cols")};
  const std::int64_t tr = cfg.integer("target_row"), tc = cfg.integer("target_col");
  if (tr < 0 || tc < 0 || tr >= static_cast<std::int64_t>(lat.rows) || tc >= static_cast<std::int64_t>(lat.cols)) {
    throw ConfigError({"target outside the lattice"});
  }
  ControlParams p;
  p.delta_ez = units.mhz(cfg.number("delta_ez_mhz"));
  p.j = units.khz(cfg.number("j_khz"));
  p.delta = units.khz(cfg.number("delta_khz"));
  p.epsilon = cfg.number("epsilon");
  const ControlScenario sc(lat, {lat.index(static_cast<std::size_t>(tr), static_cast<std::size_t>(tc))}, p);
  GibbsSweep sweep;
  sweep.temperatures = temperatures_from(cfg);
  sweep.n_a = sc.local_sites();
  sweep.n_b1 = static_cast<std::size_t>(cfg.integer("n_b1"));
  sweep.n_b2 = static_cast<std::size_t>(cfg.integer("n_b2"));
  sweep.validate();
  const EvolutionConfig ev = evolution_cfg(cfg);
  json runs = json::array();
  for (const std::string& label : cfg.list("pulses")) {
    const PulseParams& pulse = find_pulse(table, label);
    const ScenarioHamiltonians h = build_single_qubit_scenario(sc, pulse);
    const auto rows = gate_error_sweep(h, pulse.duration, sweep, ev);
    const std::string tag = slug(label);
    const std::string file = "sweep_" + tag + ".csv";
    run.write_table(file, sweep_table(rows, fmt::format("single-qubit {} gate error vs purified Gibbs entropy (Fig. 5c); "
                                                        "angular={} spectators={}",
                                                        label, units.angular, sc.spectators().size())));
    json e = sweep_checks(run, file, rows);
    e["pulse"] = label;
    e["perturbation_terms"] = h.pert.size();
    e["tan_theta"] = std::tan(sc.theta());
    if (cfg.flag("error_distance")) {
      const TimeGrid g = TimeGrid::uniform(pulse.duration, positive_count(cfg, "distance_intervals"));
      const ErrorDistance d = error_distance(h, g, ev);
      CsvTable curves;
      curves.comments.push_back(fmt::format("interaction-frame error curves ||r_mu(t)|| for {}; D={}", label,
                                            format_real(d.distance)));
      curves.columns = {"t"};
      for (std::size_t c = 0; c < d.labels.size(); ++c) curves.columns.push_back(fmt::format("r_{}", c));
      for (std::size_t i = 0; i < d.times.size(); ++i) {
        std::vector<double> row{d.times[i]};
        for (const auto& cv : d.curves) row.push_back(cv[i]);
        curves.add_row(row);
      }
      run.write_table("distance_" + tag + ".csv", curves);
      CsvTable chan;
      chan.columns = {"channel", "label"};
      for (std::size_t c = 0; c < d.labels.size(); ++c) chan.add_row({fmt::format("r_{}", c), csv_quote(d.labels[c])});
      run.write_table("channels_" + tag + ".csv", chan);
      e["error_distance"] = d.distance;
      e["distance_refinement_change"] = d.refinement_change;
    }
    runs.push_back(e);
  }
  run.summary["runs"] = runs;
  run.summary["spectators"] = sc.spectators();
  run.summary["angular"] = units.angular;
}

void run_twoqubit(Run& run) {
  const ScenarioConfig& cfg = run.cfg;
  const UnitConvention units{cfg.flag("angular")};
  const Lattice lat{positive_count(cfg, "lattice_rows"), positive_count(cfg, "lattice_cols")};
  const std::int64_t tr = cfg.integer("target_row"), tc = cfg.integer("target_col");
  if (tr < 0 || tc < 0 || tr >= static_cast<std::int64_t>(lat.rows) ||
      tc + 1 >= static_cast<std::int64_t>(lat.cols)) {
    throw ConfigError({"targets outside the lattice"});
  }
  const std::size_t r = static_cast<std::size_t>(tr), c = static_cast<std::size_t>(tc);
  GibbsSweep sweep;
  sweep.temperatures = temperatures_from(cfg);
  sweep.n_b1 = static_cast<std::size_t>(cfg.integer("n_b1"));
  sweep.n_b2 = static_cast<std::size_t>(cfg.integer("n_b2"));
  const EvolutionConfig ev = evolution_cfg(cfg);
  json runs = json::array();
  for (double gt : cfg.numbers("gate_times_ns")) {
    if (!(gt > 0.0)) throw ConfigError({"gate times must be positive"});
    ControlParams p;
    p.j_gate = units.mhz(cfg.number("j_gate_mhz"));
    p.delta = units.khz(cfg.number("delta_khz"));
    p.j_residue = units.khz(cfg.number("j_res_khz"));
    p.gate_time = gt;
    const ControlScenario sc(lat, {lat.index(r, c), lat.index(r, c + 1)}, p);
    sweep.n_a = sc.local_sites();
    const std::int64_t k = cfg.integer("entropy_qubits");
    if (k < 1 || k > static_cast<std::int64_t>(sweep.n_a)) throw ConfigError({"entropy_qubits outside A"});
    sweep.entropy_sites.resize(static_cast<std::size_t>(k));
    std::iota(sweep.entropy_sites.begin(), sweep.entropy_sites.end(), std::size_t{0});
    sweep.validate();
    const ScenarioHamiltonians h = build_two_qubit_scenario(sc);
    const auto rows = gate_error_sweep(h, gt, sweep, ev);
    const std::string file = fmt::format("sweep_T{}ns.csv", slug(fmt::format("{:g}", gt)));
    run.write_table(file, sweep_table(rows, fmt::format("two-qubit exchange gate error vs entropy of the first {} "
                                                        "qubits; gate_time={} ns angular={}",
                                                        k, format_real(gt), units.angular)));
    json e = sweep_checks(run, file, rows);
    e["gate_time_ns"] = gt;
    e["perturbation_terms"] = h.pert.size();
    e["spectators"] = sc.spectators().size();
    runs.push_back(e);
  }
  run.summary["runs"] = runs;
}

// ---- disorder ensemble ------------------------------------------------------

void run_fig6(Run& run) {
  const ScenarioConfig& cfg = run.cfg;
  const QimfSystem sys = qimf_system(cfg, false);
  if (!sys.dense) throw ConfigError({"fig6 ensembles need n_sites <= 10"});
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  const double t_final = positive_number(cfg, "t_final");
  const std::size_t n_times = positive_count(cfg, "n_times");
  const double seg_dt = positive_number(cfg, "segment_dt");
  const std::size_t per_time = segment_count(t_final / static_cast<double>(n_times), seg_dt, "segment_dt");
  const std::size_t samples = positive_count(cfg, "samples");
  if (samples < 2) throw ConfigError({"samples must be at least 2"});
  const QuadratureOptions qo = quad_opts(cfg);
  const PerturbationModel both = qimf_model(cfg, sys, "both");
  const PerturbationModel disorder = qimf_model(cfg, sys, "disorder");
  const OperatorSum n_op = both.imperfection_operator().simplified();
  const TimeGrid tested = TimeGrid::uniform(t_final, n_times);
  const std::vector<double> times(tested.points.begin() + 1, tested.points.end());
  // Fine grid with a point at every segment boundary, one segment past the last tested time.
  const std::size_t fine_n = n_times * per_time + 1;
  const TimeGrid fine = TimeGrid::uniform(seg_dt * static_cast<double>(fine_n), fine_n);

  std::vector<OperatorSum> v_ops;
  for (std::size_t k = 0; k < samples; ++k) v_ops.push_back(sample(disorder, seed, k).h_pert.simplified());

  EnsembleOptions eo;
  eo.n_samples = samples;
  eo.seed = seed;
  eo.bootstrap = static_cast<std::size_t>(cfg.integer("bootstrap"));
  eo.threads = std::max(1u, run.opts.threads);

  json runs = json::array();
  for (const std::string& spec : cfg.list("states")) {
    const NamedState st = qubit_state(spec, sys.n, seed);
    const SpectralTrajectory traj(dense_evolver(sys.h0), StateVector::full(st.amps));
    const auto ens = ensemble_trace_distance(sys.h0, both, st.amps, times, eo);
    const DisorderTraceBound bound = disorder_trace_bound(both, traj, tested, qo);
    auto integrand = [&](double t) {
      const CVector psi = traj.state(t);
      std::vector<double> v;
      v.reserve(samples + 1);
      for (const OperatorSum& vk : v_ops) v.push_back(vk.empty() ? 0.0 : resilience::apply(vk, psi).norm());
      v.push_back(n_op.empty() ? 0.0 : resilience::apply(n_op, psi).norm());
      return v;
    };
    const CumulativeIntegrals contrib = integrate_on_grid(integrand, samples + 1, fine, qo);

    CsvTable tab;
    tab.comments.push_back("disorder vs imperfection (Fig. 6): ensemble trace distance, analytic bound, "
                           "segment contributions");
    tab.comments.push_back(fmt::format("scenario={} state={} seed={} samples={} segment_dt={}", cfg.scenario(), spec,
                                       seed, samples, format_real(seg_dt)));
    tab.columns = {"t", "trace_distance", "stderr", "mean_exact_error", "bound", "disorder_part",
                   "imperfection_part", "disorder_contribution_mean", "disorder_contribution_std",
                   "imperfection_contribution"};
    const std::string file = "ensemble_" + slug(spec) + ".csv";
    json dmeans = json::array(), tlist = json::array();
    for (std::size_t i = 0; i < times.size(); ++i) {
      const std::size_t s0 = (i + 1) * per_time;
      std::vector<double> seg(samples);
      for (std::size_t k = 0; k < samples; ++k) seg[k] = contrib.values[k][s0 + 1] - contrib.values[k][s0];
      const double mean = std::accumulate(seg.begin(), seg.end(), 0.0) / static_cast<double>(samples);
      double var = 0.0;
      for (double x : seg) var += (x - mean) * (x - mean);
      const double sd = std::sqrt(var / static_cast<double>(samples - 1));
      const double imp = contrib.values[samples][s0 + 1] - contrib.values[samples][s0];
      const EnsemblePoint& e = ens[i];
      tab.add_row(std::vector<double>{e.time, e.distance, e.stderr_, e.mean_exact_error, bound.value[i + 1],
                                      bound.disorder_part[i + 1], bound.imperfection_part[i + 1], mean, sd, imp});
      if (e.distance > bound.value[i + 1] + 3.0 * e.stderr_) {
        run.violation(fmt::format("{} row {}: ensemble distance {:.6e} exceeds bound {:.6e} + 3 stderr", file, i,
                                  e.distance, bound.value[i + 1]));
      }
      if (e.distance > 2.0 * e.mean_exact_error * (1 + 1e-12) + 1e-12) {
        run.violation(fmt::format("{} row {}: ensemble distance exceeds twice the mean exact error", file, i));
      }
      dmeans.push_back(mean);
      tlist.push_back(e.time);
    }
    run.write_table(file, tab);
    runs.push_back({{"state", spec}, {"times", tlist}, {"disorder_contribution_mean", dmeans}, {"file", file}});
  }
  run.summary["runs"] = runs;
}

// ---- lemma --------------------------------------------------------------------

void run_lemma(Run& run) {
  const ScenarioConfig& cfg = run.cfg;
  const std::size_t trials = positive_count(cfg, "trials");
  const std::size_t maxq = positive_count(cfg, "max_qubits");
  if (maxq < 2 || maxq > 8) throw ConfigError({"max_qubits must be in 2..8"});
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  const LemmaCertification cert = certify_lemma(trials, seed, std::max(1u, run.opts.threads), maxq);
  CsvTable tab;
  tab.comments.push_back("entanglement lemma certification: |<A>| <= Tr(A)/d + Delta");
  tab.comments.push_back(fmt::format("seed={} trials={} max_qubits={}", seed, trials, maxq));
  tab.columns = {"trial", "n_qubits", "n_terms", "state_kind", "abs_expectation", "trace_term", "delta", "violated"};
  for (const LemmaTrial& t : cert.trials) {
    tab.add_row({std::to_string(t.index), std::to_string(t.n_qubits), std::to_string(t.n_terms), t.state_kind,
                 format_real(t.expectation), format_real(t.trace_term), format_real(t.delta),
                 t.violated ? "1" : "0"});
    if (t.violated) {
      run.violation(fmt::format("lemma trial {}: {:.6e} > {:.6e} + {:.6e}", t.index, t.expectation, t.trace_term,
                                t.delta));
    }
  }
  run.write_table("lemma_trials.csv", tab);
  run.summary["trials"] = trials;
  run.summary["violations"] = cert.violations;
}

}  // namespace

// ---- public -------------------------------------------------------------------

double one_segment_error(const OperatorSum& h0, const OperatorSum& h_pert, const CVector& psi_t, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("one_segment_error: dt must be positive");
  const OperatorSum h = (h0 + h_pert).simplified();
  if (h0.n_sites() <= 10) {
    return exact_error(expm_hermitian(to_dense(h0), dt) * psi_t, expm_hermitian(to_dense(h), dt) * psi_t);
  }
  return exact_error(evolve_sparse(h0, psi_t, dt), evolve_sparse(h, psi_t, dt));
}

double one_segment_error(const SpectralEvolver& ideal, const SpectralEvolver& noisy, const CVector& psi_t,
                         double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("one_segment_error: dt must be positive");
  if (&ideal == &noisy) return 0.0;
  return exact_error(ideal.evolve(psi_t, dt), noisy.evolve(psi_t, dt));
}

double one_segment_error(const RSparse& ideal, const RSparse& noisy, const CVector& psi_t, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("one_segment_error: dt must be positive");
  return exact_error(evolve_sparse(ideal, psi_t, dt), evolve_sparse(noisy, psi_t, dt));
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: need two equal-length series");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

namespace {
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}
}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) { return pearson(ranks(a), ranks(b)); }

ScenarioResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  Run run{cfg, opts, OutputSink(cfg.output_dir(), opts.write_files), {}, json::object()};
  run.sink.write("config.txt", cfg.canonical());
  const std::string& id = cfg.scenario();
  if (id == "fig2_longtime") run_qimf(run, false, {true, false});
  else if (id == "fig2_segment") run_qimf(run, false, {false, true});
  else if (id == "supp_qimf2d") run_qimf(run, true, {true, true});
  else if (id == "fig3_hubbard_segment") run_fig3(run);
  else if (id == "fig7_hubbard_longtime") run_fig7(run);
  else if (id == "fig4_crossterms") run_fig4(run);
  else if (id == "fig5_control_sweep") run_fig5(run);
  else if (id == "supp_twoqubit") run_twoqubit(run);
  else if (id == "fig6_disorder_vs_imperfection") run_fig6(run);
  else if (id == "lemma_certification") run_lemma(run);
  else throw std::logic_error("scenario without a runner: " + id);

  ScenarioResult res;
  res.violations = std::move(run.violations);
  res.summary = std::move(run.summary);
  res.summary["violations"] = res.violations.size();
  RunManifest& m = res.manifest;
  m.scenario = id;
  m.config_hash = cfg.hash();
  m.code_version = RESILIENCE_VERSION;
  m.rng_identity = Rng::identity();
  m.output_dir = run.sink.dir();
  m.outputs = run.sink.records();
  m.violation_count = res.violations.size();
  m.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (opts.write_files) {
    json j = m.to_json();
    j["violation_messages"] = res.violations;
    j["summary"] = res.summary;
    write_json(run.sink.dir() + "/manifest.json", j);
  }
  return res;
}

void clear_evolver_cache() {
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  g_evolvers.clear();
}

// ---- lemma trials ---------------------------------------------------------------

LemmaTrial lemma_trial(std::uint64_t seed, std::size_t index, std::size_t max_qubits) {
  if (max_qubits < 2) throw std::invalid_argument("lemma_trial: need at least 2 qubits");
  Rng rng(seed, index);
  const std::size_t n = 2 + rng.below(max_qubits - 1);
  const std::size_t dim = std::size_t{1} << n;
  OperatorSum b(n);
  const std::size_t n_terms = 1 + rng.below(6);
  for (std::size_t k = 0; k < n_terms; ++k) {
    const std::size_t s0 = rng.below(n);
    std::vector<PauliString::Factor> f{{s0, static_cast<Axis>(rng.below(3))}};
    if (rng.below(3) != 0) {
      std::size_t s1 = rng.below(n - 1);
      if (s1 >= s0) ++s1;
      f.push_back({s1, static_cast<Axis>(rng.below(3))});
      std::sort(f.begin(), f.end(), [](const auto& x, const auto& y) { return x.site < y.site; });
    }
    b.add(cplx(rng.normal(), rng.normal()), PauliString::from_factors(f));
  }
  const OperatorSum a = hermitian_square(b);

  static const char* kinds[] = {"haar", "product", "partial", "basis"};
  const std::size_t kind = rng.below(4);
  CVector psi;
  auto product = [&](std::size_t from, CVector head) {
    // head covers qubits [0, from); remaining qubits get random single-qubit states
    CVector out = head;
    for (std::size_t q = from; q < n; ++q) {
      const CVector v = haar_state(2, rng);
      CVector next(out.size() * 2);
      next.head(out.size()) = out * v(0);
      next.tail(out.size()) = out * v(1);
      out = next;
    }
    return out;
  };
  if (kind == 0) {
    psi = haar_state(dim, rng);
  } else if (kind == 1) {
    psi = product(0, CVector::Ones(1));
  } else if (kind == 2) {
    const std::size_t m = 2 + rng.below(n - 1);
    psi = product(m, haar_state(std::size_t{1} << m, rng));
  } else {
    psi = StateVector::basis_state(n, rng.below(dim)).amplitudes();
  }

  const CMatrix dense = to_dense(a);
  const double expect = std::abs(psi.dot(dense * psi));
  const double tr = dense.trace().real() / static_cast<double>(dim);
  const double delta = entanglement_delta(a, psi);
  const bool bad = expect > (tr + delta) * (1 + 1e-12) + 1e-12;
  return {index, n, n_terms, kinds[kind], expect, tr, delta, bad};
}

LemmaCertification certify_lemma(std::size_t trials, std::uint64_t seed, unsigned threads, std::size_t max_qubits) {
  LemmaCertification out;
  out.trials.resize(trials);
  const unsigned nt = std::max(1u, threads);
  if (nt == 1) {
    for (std::size_t k = 0; k < trials; ++k) out.trials[k] = lemma_trial(seed, k, max_qubits);
  } else {
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < nt; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t k = w; k < trials; k += nt) out.trials[k] = lemma_trial(seed, k, max_qubits);
      }));
    }
    for (auto& j : jobs) j.get();
  }
  for (const LemmaTrial& t : out.trials) out.violations += t.violated ? 1 : 0;
  return out;
}

}  // namespace resilience
