#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tslt/campaign.hpp"
#include "tslt/config.hpp"
#include "tslt/perf_model.hpp"
#include "tslt/prob.hpp"
#include "tslt/sd_multi.hpp"
#include "tslt/sd_single.hpp"
#include "tslt/synth_models.hpp"
#include "tslt/theory_checks.hpp"

namespace py = pybind11;
using namespace tslt;

namespace {

Categorical to_cat(const std::vector<double>& p) { return Categorical(p); }
std::vector<double> to_list(const Categorical& c) { return {c.probs().begin(), c.probs().end()}; }

TruncationMode make_mode(std::optional<std::size_t> top_k, std::optional<double> top_rho,
                         bool exclusive) {
  if (top_k.has_value() == top_rho.has_value()) {
    throw std::invalid_argument("pass exactly one of top_k or top_rho");
  }
  if (top_k) return TopK{*top_k};
  return TopRho{*top_rho, exclusive};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distributed speculative decoding simulator with truncated sparse logits";

  m.def("tv_distance", [](const std::vector<double>& a, const std::vector<double>& b) {
    return tv_distance(to_cat(a), to_cat(b));
  });

  m.def(
      "truncate",
      [](const std::vector<double>& q, std::optional<std::size_t> top_k,
         std::optional<double> top_rho, bool exclusive) {
        auto t = truncate(to_cat(q), make_mode(top_k, top_rho, exclusive));
        py::dict d;
        d["q_hat"] = to_list(t.q_hat);
        d["kept"] = t.spec.kept_set;
        d["discarded_mass"] = t.spec.discarded_mass;
        return d;
      },
      py::arg("q"), py::kw_only(), py::arg("top_k") = py::none(), py::arg("top_rho") = py::none(),
      py::arg("exclusive") = false);

  m.def("residual", [](const std::vector<double>& p, const std::vector<double>& q) {
    auto r = residual(to_cat(p), to_cat(q));
    return py::make_tuple(to_list(r.dist), r.normalizer, r.degenerate);
  });

  m.def("sc_output_law", [](const std::vector<double>& p, const std::vector<double>& q) {
    auto e = sc_output_dist_exact(to_cat(p), to_cat(q));
    return py::make_tuple(to_list(e.law), e.acceptance);
  });

  m.def("mc_output_law", [](const std::vector<double>& p, const std::vector<double>& q,
                            std::size_t k) {
    auto e = mc_output_dist_exact(to_cat(p), to_cat(q), k);
    return py::make_tuple(to_list(e.law), e.total_acceptance);
  });

  m.def("n_oracle_expected", &n_oracle_expected, py::arg("alpha"), py::arg("draft_len"));

  m.def(
      "payload_bits",
      [](std::size_t dists, std::size_t effective_vocab, std::size_t vocab, int b_prob,
         const std::string& convention) {
        auto link = LinkModel::make(1.0, vocab, b_prob, parse_payload_convention(convention));
        return payload_bits(DraftShape{dists}, effective_vocab, link);
      },
      py::arg("dists"), py::arg("effective_vocab"), py::arg("vocab") = 32000,
      py::arg("b_prob") = 16, py::arg("convention") = "indexed");

  m.def(
      "sc_speedup",
      [](double alpha, std::size_t draft_len, std::size_t effective_vocab, double r_up_bps,
         double t_slm, double t_llm, std::size_t vocab, const std::string& convention) {
        auto link = LinkModel::make(r_up_bps, vocab, 16, parse_payload_convention(convention));
        return sc_throughput_and_speedup(link, TimingModel{t_slm, t_llm}, alpha, draft_len,
                                         effective_vocab)
            .speedup;
      },
      py::arg("alpha"), py::arg("draft_len"), py::arg("effective_vocab"), py::arg("r_up_bps"),
      py::arg("t_slm") = 0.00125, py::arg("t_llm") = 0.025, py::arg("vocab") = 32000,
      py::arg("convention") = "indexed");

  py::class_<ModelPair>(m, "ModelPair")
      .def(py::init([](std::size_t vocab, int order, double divergence, double concentration,
                       double noise_concentration, std::uint64_t seed) {
             ModelPairParams p;
             p.vocab_size = vocab;
             p.context_order = order;
             p.divergence = divergence;
             p.concentration = concentration;
             p.noise_concentration = noise_concentration;
             p.seed = seed;
             return ModelPair(p);
           }),
           py::arg("vocab_size"), py::arg("context_order") = 1, py::arg("divergence") = 0.0,
           py::arg("concentration") = 1.0, py::arg("noise_concentration") = 0.0,
           py::arg("seed") = 0)
      .def("target", [](const ModelPair& m, const std::vector<TokenId>& ctx) {
        return to_list(m.target_dist(ctx));
      })
      .def("draft", [](const ModelPair& m, const std::vector<TokenId>& ctx) {
        return to_list(m.draft_dist(ctx));
      })
      .def("mean_acceptance", [](const ModelPair& m, std::size_t contexts, std::uint64_t seed) {
        const auto& p = m.params();
        return mean_acceptance(m, sample_contexts(p.vocab_size, p.context_order, contexts, seed));
      }, py::arg("contexts") = 500, py::arg("seed") = 0);

  m.def(
      "run_sc_session",
      [](const ModelPair& m, std::size_t draft_len, std::optional<std::size_t> top_k,
         std::size_t stop_len, std::uint64_t seed) {
        ScSessionConfig cfg;
        cfg.draft_len = draft_len;
        if (top_k) cfg.truncation = TopK{*top_k};
        cfg.stop_len = stop_len;
        cfg.link = LinkModel::make(1e6, m.vocab_size());
        Rng rng(seed);
        auto tr = run_sc_session(m, {}, cfg, rng);
        py::dict d;
        d["sequence"] = tr.sequence;
        d["oracles"] = tr.stats.oracles;
        d["tests"] = tr.stats.tests;
        d["accepts"] = tr.stats.accepts;
        return d;
      },
      py::arg("model"), py::arg("draft_len") = 4, py::arg("top_k") = py::none(),
      py::arg("stop_len") = 64, py::arg("seed") = 0);

  m.def(
      "run_config",
      [](const std::string& path, std::optional<std::uint64_t> seed, std::size_t jobs,
         std::optional<std::string> out_dir, bool theory_only) {
        auto cfg = load_config(path);
        if (seed) cfg.seed = seed;
        cfg.jobs = jobs;
        CampaignReport rep;
        {
          py::gil_scoped_release release;
          rep = run_campaign(cfg, theory_only);
        }
        if (out_dir) write_outputs(rep, cfg, *out_dir);
        std::ostringstream summary;
        write_summary(summary, rep, cfg);
        py::dict d;
        d["violations"] = rep.violations;
        d["summary"] = summary.str();
        return d;
      },
      py::arg("path"), py::kw_only(), py::arg("seed") = py::none(), py::arg("jobs") = 1,
      py::arg("out_dir") = py::none(), py::arg("theory_only") = false);

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
}
