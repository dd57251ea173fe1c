#include "permuap/json_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace permuap {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

json vec(const Eigen::VectorXd &v)
{
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw std::invalid_argument("non-finite value in network");
    a.push_back(v[i]);
  }
  return a;
}

Eigen::VectorXd vec(const json &a)
{
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

json mat(const Eigen::MatrixXd &m)
{
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec(Eigen::VectorXd(m.row(r).transpose())));
  return rows;
}

double finite(double x)
{
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value in network");
  return x;
}

}  // namespace

std::string net_to_json(const ReluNetd &net, int indent)
{
  net.validate();
  json j;
  j["format"]    = "permuap-net";
  j["version"]   = 1;
  j["input_dim"] = net.input_dim;
  j["n"]         = net.size() / 2;
  j["domain"]    = {{"lo", vec(net.domain.lo)}, {"hi", vec(net.domain.hi)}};
  j["activation"] = {{"kind", net.activation.kind == ActivationKind::relu ? "relu" : "leaky"},
                     {"slope", net.activation.slope}};
  j["axes"] = mat(net.axes);
  json basis = json::array();
  for (const auto &bf : net.basis) basis.push_back({{"b", finite(bf.location)}, {"dir", bf.side}, {"axis", bf.axis}});
  j["basis"]            = std::move(basis);
  j["theta"]            = vec(net.theta);
  j["alpha"]            = finite(net.alpha);
  j["gamma"]            = finite(net.gamma);
  j["initial_multiset"] = vec(net.initial_multiset);
  return j.dump(indent);
}

ReluNetd net_from_json(const std::string &text)
{
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw std::invalid_argument(std::string("network JSON: ") + e.what());
  }
  try {
    ReluNetd net;
    net.input_dim = j.value("input_dim", 1);
    if (j.contains("axes")) {
      const auto &rows = j.at("axes");
      const auto cols  = rows.empty() ? 0 : rows[0].size();
      net.axes.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
      for (std::size_t r = 0; r < rows.size(); ++r) net.axes.row(static_cast<Eigen::Index>(r)) = vec(rows[r]).transpose();
    }
    net.domain.lo = vec(j.at("domain").at("lo"));
    net.domain.hi = vec(j.at("domain").at("hi"));
    const auto &act = j.at("activation");
    const std::string kind = act.at("kind").get<std::string>();
    if (kind == "relu")
      net.activation = Activation::relu();
    else if (kind == "leaky")
      net.activation = Activation::leaky(act.at("slope").get<double>());
    else
      throw std::invalid_argument("unknown activation '" + kind + "'");
    for (const auto &bf : j.at("basis"))
      net.basis.push_back({bf.at("b").get<double>(), bf.value("axis", 0), bf.at("dir").get<int>()});
    net.theta            = vec(j.at("theta"));
    net.alpha            = j.at("alpha").get<double>();
    net.gamma            = j.at("gamma").get<double>();
    net.initial_multiset = vec(j.at("initial_multiset"));
    net.validate();
    return net;
  } catch (const json::exception &e) {
    throw std::invalid_argument(std::string("network JSON: ") + e.what());
  }
}

std::string ledger_to_json(const ConstructionLedger &l, int indent)
{
  json b = {{"g_error", l.budget.g_error},   {"e_use", l.budget.e_use}, {"e_un", l.budget.e_un},
            {"e_un_bound", l.budget.e_un_bound}, {"total", l.budget.total}, {"measured", l.budget.measured},
            {"eps", l.budget.eps}};
  json j = {{"builder", l.builder},
            {"n", l.n},
            {"n_hat", l.n_hat},
            {"refinement", l.refinement},
            {"delta_h", l.delta_h},
            {"j_prime", l.j_prime},
            {"used_sets", l.used_sets},
            {"magnitude_sets", l.magnitude_sets},
            {"constant_sets", l.constant_sets},
            {"unused", l.unused},
            {"unused_signs", l.unused_signs},
            {"retired", l.retired ? json(*l.retired) : json(nullptr)},
            {"beta", l.beta},
            {"eta", l.eta},
            {"c_eta", l.c_eta},
            {"c_c", l.c_c},
            {"c_r", l.c_r},
            {"gamma", l.gamma},
            {"alpha", l.alpha},
            {"budget", b},
            {"domain_map", l.domain_map},
            {"notes", l.notes}};
  return j.dump(indent);
}

std::string report_summary_json(const TrainReport &r, int indent)
{
  std::size_t moved = 0;
  for (const auto &e : r.events) moved += e.moved;
  json j = {{"epochs", r.epochs.size()},
            {"events", r.events.size()},
            {"moved_total", moved},
            {"multiset_ok", r.multiset_ok},
            {"alpha", r.net.alpha},
            {"gamma", r.net.gamma},
            {"wall_seconds", r.wall_seconds}};
  j["final_epoch_loss"] = r.epochs.empty() ? json(nullptr) : json(r.epochs.back().loss);
  j["final_loss"]       = r.events.empty() ? j["final_epoch_loss"] : json(r.events.back().loss_after);
  return j.dump(indent);
}

std::string sweep_config_json(const SweepConfig &c)
{
  json j = {{"targets", c.targets},       {"strategies", c.strategies}, {"n", c.n_list},
            {"seeds", c.seeds},           {"epochs", c.epochs},         {"data_scale", c.data_scale},
            {"full_scale", c.full_scale}};
  j["lr"]         = c.lr ? json(*c.lr) : json(nullptr);
  j["k"]          = c.k ? json(*c.k) : json(nullptr);
  j["batch_size"] = c.batch_size ? json(*c.batch_size) : json(nullptr);
  return j.dump();
}

}  // namespace permuap
