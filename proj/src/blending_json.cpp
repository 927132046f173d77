#include <json.hpp>

#include "mscg/blending.hpp"

namespace mscg {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                                 const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw Error(std::string("instance schema: bad ") + what);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw Error(std::string("instance schema: bad ") + what);
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

}  // namespace

std::string instance_to_json(const BlendingInstance& inst) {
  json j;
  j["format"] = "mscg-blending-instance";
  j["version"] = 1;
  j["seed"] = inst.seed;
  j["tanks"] = inst.tanks;
  j["outputs"] = inst.outputs;
  j["periods"] = inst.periods;
  j["branching"] = inst.tree.branching();
  j["nodes"] = inst.tree.node_count();
  j["capacity"] = std::vector<double>(inst.capacity.data(), inst.capacity.data() + inst.tanks);
  j["quality"] = std::vector<double>(inst.quality.data(), inst.quality.data() + inst.tanks);
  j["install_cost"] = matrix_to_json(inst.install_cost);
  j["production_cost"] = matrix_to_json(inst.production_cost);
  j["transport_cost"] = matrix_to_json(inst.transport_cost);
  j["price_slope"] = matrix_to_json(inst.price_slope);
  j["price_intercept"] = matrix_to_json(inst.price_intercept);
  json dmin = json::object(), dmax = json::object();
  for (NodeId n = 1; n < inst.tree.node_count(); ++n) {
    json lo = json::array(), hi = json::array();
    for (int q = 0; q < inst.outputs; ++q) {
      lo.push_back(inst.demand_min(q, n));
      hi.push_back(inst.demand_max(q, n));
    }
    dmin[std::to_string(n)] = std::move(lo);
    dmax[std::to_string(n)] = std::move(hi);
  }
  j["demand_min"] = std::move(dmin);
  j["demand_max"] = std::move(dmax);
  return j.dump(2) + "\n";
}

BlendingInstance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("instance schema: not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", std::string{}) != "mscg-blending-instance")
      throw Error("instance schema: unexpected format tag");
    BlendingInstance inst;
    inst.seed = j.at("seed").get<std::uint64_t>();
    inst.tanks = j.at("tanks").get<int>();
    inst.outputs = j.at("outputs").get<int>();
    inst.periods = j.at("periods").get<int>();
    if (inst.tanks < 1 || inst.outputs < 1 || inst.periods < 1)
      throw Error("instance schema: non-positive dimensions");
    const auto branching = j.at("branching").get<std::vector<int>>();
    inst.tree = build_tree(branching);
    const Eigen::Index I = inst.tanks, J = inst.outputs, T = inst.periods;
    const Eigen::MatrixXd cap = matrix_from_json(json::array({j.at("capacity")}), 1, I, "capacity");
    inst.capacity = cap.row(0);
    const Eigen::MatrixXd qual = matrix_from_json(json::array({j.at("quality")}), 1, I, "quality");
    inst.quality = qual.row(0);
    inst.install_cost = matrix_from_json(j.at("install_cost"), I, T, "install_cost");
    inst.production_cost = matrix_from_json(j.at("production_cost"), I, T, "production_cost");
    inst.transport_cost = matrix_from_json(j.at("transport_cost"), I, J, "transport_cost");
    inst.price_slope = matrix_from_json(j.at("price_slope"), J, T, "price_slope");
    inst.price_intercept = matrix_from_json(j.at("price_intercept"), J, T, "price_intercept");
    inst.demand_min.setZero(J, inst.tree.node_count());
    inst.demand_max.setZero(J, inst.tree.node_count());
    for (NodeId n = 1; n < inst.tree.node_count(); ++n) {
      const auto& lo = j.at("demand_min").at(std::to_string(n));
      const auto& hi = j.at("demand_max").at(std::to_string(n));
      if (static_cast<Eigen::Index>(lo.size()) != J || static_cast<Eigen::Index>(hi.size()) != J)
        throw Error("instance schema: bad demand bounds");
      for (Eigen::Index q = 0; q < J; ++q) {
        inst.demand_min(q, n) = lo[static_cast<std::size_t>(q)].get<double>();
        inst.demand_max(q, n) = hi[static_cast<std::size_t>(q)].get<double>();
        if (!(inst.demand_min(q, n) < inst.demand_max(q, n)))
          throw Error("instance schema: demand_min must be below demand_max");
      }
    }
    return inst;
  } catch (const json::exception& e) {
    throw Error(std::string("instance schema: ") + e.what());
  }
}

}  // namespace mscg
