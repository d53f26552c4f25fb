// Python access to the core library: configs, realizations, max-cut, the
// simulator, models and evaluation. Matrices cross as numpy arrays.
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rawgrl/actorcritic.hpp"
#include "rawgrl/baselines.hpp"
#include "rawgrl/config.hpp"
#include "rawgrl/desim.hpp"
#include "rawgrl/errors.hpp"
#include "rawgrl/maxcut.hpp"
#include "rawgrl/netmodel.hpp"
#include "rawgrl/online.hpp"
#include "rawgrl/training.hpp"

namespace py = pybind11;
using namespace rawgrl;

PYBIND11_MODULE(_rawgrl, m) {
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("num_users", &ScenarioConfig::num_users)
      .def_readwrite("num_groups", &ScenarioConfig::num_groups)
      .def_readwrite("area_half_width", &ScenarioConfig::area_half_width)
      .def_readwrite("arrival_interval_mean", &ScenarioConfig::arrival_interval_mean)
      .def_readwrite("raw_slot_duration", &ScenarioConfig::raw_slot_duration)
      .def_readwrite("sense_threshold_db", &ScenarioConfig::sense_threshold_db)
      .def_readwrite("queue_capacity", &ScenarioConfig::queue_capacity)
      .def("validate", &ScenarioConfig::validate);

  py::class_<MacConfig>(m, "MacConfig").def(py::init<>()).def_readwrite("cw_min", &MacConfig::cw_min);
  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("M", &ModelConfig::M)
      .def_readwrite("E", &ModelConfig::E)
      .def_readwrite("zeta", &ModelConfig::zeta);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("steps", &TrainConfig::steps)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("sim_slots", &TrainConfig::sim_slots)
      .def_readwrite("seed", &TrainConfig::seed);
  py::class_<EvalConfig>(m, "EvalConfig")
      .def(py::init<>())
      .def_readwrite("realizations", &EvalConfig::realizations)
      .def_readwrite("sim_slots", &EvalConfig::sim_slots)
      .def_readwrite("seed", &EvalConfig::seed);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("scenario", &RunConfig::scenario)
      .def_readwrite("mac", &RunConfig::mac)
      .def_readwrite("model", &RunConfig::model)
      .def_readwrite("pretrain", &RunConfig::pretrain)
      .def_readwrite("train", &RunConfig::train)
      .def_readwrite("eval", &RunConfig::eval)
      .def("to_toml", [](const RunConfig& c) { return to_toml(c); });
  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));

  py::class_<NetworkRealization>(m, "NetworkRealization")
      .def_property_readonly("num_users", &NetworkRealization::num_users)
      .def_readonly("user_ap_loss", &NetworkRealization::user_ap_loss)
      .def_readonly("user_user_loss", &NetworkRealization::user_user_loss)
      .def_readonly("assoc", &NetworkRealization::assoc)
      .def_readonly("packet_duration", &NetworkRealization::packet_duration)
      .def_property_readonly("user_positions", [](const NetworkRealization& r) {
        std::vector<std::pair<double, double>> out;
        for (const auto& p : r.user_positions) out.emplace_back(p.x, p.y);
        return out;
      });
  m.def("generate_realization", &generate_realization, py::arg("scenario"), py::arg("seed"));
  m.def("observe_states", [](const NetworkRealization& r, const ScenarioConfig& c) { return observe_states(r, c).values; });
  m.def("sensing_matrix", [](const NetworkRealization& r, const ScenarioConfig& c) { return sensing_matrix(r, c).sensed; });

  py::class_<SdpSolution>(m, "SdpSolution")
      .def_readonly("X", &SdpSolution::X)
      .def_readonly("objective", &SdpSolution::objective)
      .def_readonly("sweeps", &SdpSolution::sweeps)
      .def_readonly("ipm_iterations", &SdpSolution::ipm_iterations);
  m.def("solve_maxcut_sdp", &solve_maxcut_sdp, py::arg("W"), py::arg("tol") = 1e-6, py::arg("max_sweeps") = 5000,
        py::arg("max_ipm_iterations") = 100);
  m.def("cut_value", &cut_value, py::arg("W"), py::arg("groups"));
  m.def("brute_force_maxcut", [](const Eigen::MatrixXd& W, int Z) {
    const auto b = brute_force_maxcut(W, Z);
    return py::make_tuple(b.groups, b.value);
  });
  m.def(
      "do_graph_cut",
      [](const Eigen::MatrixXd& W, int num_groups, std::uint64_t seed, bool exact) {
        Rng rng(seed);
        CutOptions opts;
        opts.exact = exact;
        return do_graph_cut(num_groups, EdgeGraph{W}, rng, opts).groups;
      },
      py::arg("W"), py::arg("num_groups"), py::arg("seed") = 0, py::arg("exact") = false);

  py::class_<ThroughputReport>(m, "ThroughputReport")
      .def_readonly("successes", &ThroughputReport::successes)
      .def_readonly("rate", &ThroughputReport::rate)
      .def_readonly("arrived", &ThroughputReport::arrived)
      .def_readonly("delivered", &ThroughputReport::delivered)
      .def_readonly("dropped", &ThroughputReport::dropped)
      .def_readonly("queued", &ThroughputReport::queued)
      .def("worst_case", &ThroughputReport::worst_case);
  m.def(
      "run_sim",
      [](const NetworkRealization& r, const ScenarioConfig& c, const std::vector<int>& groups, int num_groups,
         int slots, std::uint64_t seed) {
        return run_sim(r, c, GroupAssignment{groups, num_groups}, slots, MacConfig{}, seed);
      },
      py::arg("realization"), py::arg("scenario"), py::arg("groups"), py::arg("num_groups"), py::arg("slots"),
      py::arg("seed"));

  py::class_<ParamStore>(m, "ParamStore")
      .def("names", &ParamStore::names)
      .def("total_size", &ParamStore::total_size)
      .def("data", [](const ParamStore& p, const std::string& n) { return p.data(n); })
      .def("to_json", &ParamStore::to_json)
      .def_static("from_json", &ParamStore::from_json)
      .def("save", &ParamStore::save)
      .def_static("load", &ParamStore::load)
      .def("__eq__", &ParamStore::operator==);
  m.def("init_model", [](const ModelConfig& c, std::uint64_t seed) {
    Rng rng = make_rng(seed, Stream::Init);
    return init_model(c, rng);
  });
  m.def("actor_weights", [](const ParamStore& p, const ModelConfig& c, const Eigen::MatrixXd& S) {
    return actor_weights(p, c, StateMatrix{S}).W;
  });
  m.def("critic_q", [](const ParamStore& p, const ModelConfig& c, const Eigen::MatrixXd& S, const Eigen::MatrixXd& W) {
    return critic_forward(p, c, StateMatrix{S}, EdgeGraph{W}).Q;
  });

  py::class_<InferenceQuality>(m, "InferenceQuality")
      .def_readonly("loss", &InferenceQuality::loss)
      .def_readonly("accuracy_neg", &InferenceQuality::accuracy_neg)
      .def_readonly("accuracy_pos", &InferenceQuality::accuracy_pos);
  m.def(
      "pretrain",
      [](ParamStore& p, const TrainConfig& t, const ScenarioConfig& s, const ModelConfig& c) {
        py::gil_scoped_release release;
        pretrain_inference(t, s, c, p);
      },
      py::arg("params"), py::arg("train"), py::arg("scenario"), py::arg("model"));
  m.def(
      "train",
      [](ParamStore& p, const TrainConfig& t, const ScenarioConfig& s, const ModelConfig& c, const MacConfig& mac) {
        py::gil_scoped_release release;
        train_actor_critic(t, s, c, mac, p);
      },
      py::arg("params"), py::arg("train"), py::arg("scenario"), py::arg("model"), py::arg("mac") = MacConfig{});
  m.def("inference_quality", &inference_quality, py::arg("params"), py::arg("model"), py::arg("scenario"),
        py::arg("realizations"), py::arg("seed"));

  py::class_<EvalSummary>(m, "EvalSummary")
      .def_readonly("worst_case", &EvalSummary::worst_case)
      .def_readonly("per_user", &EvalSummary::per_user)
      .def_readonly("mean_worst_case", &EvalSummary::mean_worst_case)
      .def_readonly("mean_total", &EvalSummary::mean_total);
  m.def(
      "evaluate",
      [](const std::string& policy, const ParamStore* params, const ModelConfig& model, const ScenarioConfig& s,
         const EvalConfig& e) {
        const auto pol = make_policy(policy, params, model, s);
        py::gil_scoped_release release;
        return evaluate(pol, s, MacConfig{}, e);
      },
      py::arg("policy"), py::arg("params"), py::arg("model"), py::arg("scenario"), py::arg("eval"));
}
