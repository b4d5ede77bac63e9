#include "distil/states.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unsupported/Eigen/KroneckerProduct>

namespace distil {

namespace {

void check_prob(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
}

Layout qubit_pair(int D = 2) { return Layout({{"A1", Party::Alice, D}, {"B1", Party::Bob, D}}); }

CMat ket_proj(int idx, int dim) {
  CMat m = CMat::Zero(dim, dim);
  m(idx, idx) = 1.0;
  return m;
}

std::vector<double> parse_numbers(const std::string& s, int* sign) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    if (tok == "+" || tok == "-") {
      if (!sign) throw std::invalid_argument("unexpected sign token in state spec");
      *sign = tok == "+" ? +1 : -1;
      continue;
    }
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("bad number '" + tok + "' in state spec");
    out.push_back(v);
  }
  return out;
}

}  // namespace

Operator isotropic(double p, int D) {
  check_prob(p, "isotropic p");
  if (D < 2) throw std::invalid_argument("isotropic D must be >= 2");
  CMat m = p * max_entangled(D) + (1 - p) * CMat::Identity(D * D, D * D) / double(D * D);
  return make_density(qubit_pair(D), m);
}

Operator bell_diag(double p1, double p2, double p3) {
  check_prob(p1, "p1");
  check_prob(p2, "p2");
  check_prob(p3, "p3");
  double p4 = 1 - p1 - p2 - p3;
  if (p4 < -1e-12) throw std::invalid_argument("bell_diag weights exceed 1");
  p4 = std::max(p4, 0.0);
  CMat m = p1 * bell_proj(0) + p2 * bell_proj(1) + p3 * bell_proj(2) + p4 * bell_proj(3);
  return make_density(qubit_pair(), m);
}

Operator r_state(double p, int sign) {
  check_prob(p, "p");
  CMat m = p * bell_proj(sign > 0 ? 1 : 3) + (1 - p) * ket_proj(3, 4);
  return make_density(qubit_pair(), m);
}

Operator rotated_r(double p) {
  check_prob(p, "p");
  CMat m = p * bell_proj(0) + (1 - p) * ket_proj(1, 4);
  return make_density(qubit_pair(), m);
}

Operator s_state(double p) {
  check_prob(p, "p");
  CMat m = p * bell_proj(0) + (1 - p) * ket_proj(3, 4);
  return make_density(qubit_pair(), m);
}

Operator epl_integrated(double p, double pd) {
  check_prob(p, "p");
  check_prob(pd, "p_d");
  const double a = p * p / 4, b = (1 - p) * p / 2, c = (1 - p) * (1 - p), d = 2 * pd - 1;
  // built in A1 B1 A2 B2 order
  CMat podd = ket_proj(1, 4) + ket_proj(2, 4);
  CMat p11 = ket_proj(3, 4);
  CMat s01_10 = CMat::Zero(4, 4);  // |01><10|
  s01_10(1, 2) = 1.0;
  CMat coh = Eigen::kroneckerProduct(s01_10, CMat(s01_10.adjoint())).eval();
  CMat m = a * (Eigen::kroneckerProduct(podd, podd).eval() + d * (coh + CMat(coh.adjoint()))) +
           b * (Eigen::kroneckerProduct(p11, podd).eval() + Eigen::kroneckerProduct(podd, p11).eval()) +
           c * Eigen::kroneckerProduct(p11, p11).eval();
  Layout l({{"A1", Party::Alice, 2}, {"B1", Party::Bob, 2}, {"A2", Party::Alice, 2}, {"B2", Party::Bob, 2}});
  Operator op(l, m);
  Operator perm = permute_subsystems(op, {"A1", "A2", "B1", "B2"});
  return make_density(perm.layout(), perm.mat());
}

Operator relabel_copy(const Operator& single, int k) {
  std::vector<Subsystem> es;
  for (const auto& e : single.layout().entries()) {
    std::string base = e.label.substr(0, e.label.size() - 1);
    es.push_back({base + std::to_string(k), e.party, e.dim});
  }
  return Operator(Layout(es), single.mat());
}

Operator tensor_copies(const Operator& single, int n) {
  if (n < 1) throw std::invalid_argument("copies must be >= 1");
  if (single.layout().size() != 2) throw std::invalid_argument("tensor_copies expects a single-copy (A1,B1) state");
  Operator acc = relabel_copy(single, 1);
  for (int k = 2; k <= n; ++k) acc = kron(acc, relabel_copy(single, k));
  std::vector<std::string> order;
  for (int k = 1; k <= n; ++k) order.push_back("A" + std::to_string(k));
  for (int k = 1; k <= n; ++k) order.push_back("B" + std::to_string(k));
  Operator p = permute_subsystems(acc, order);
  return make_density(p.layout(), p.mat());
}

StateSpec parse_state_spec(const std::string& text) {
  StateSpec spec;
  std::string body = text;
  auto semi = text.find(';');
  if (semi != std::string::npos) {
    body = text.substr(0, semi);
    std::string opt = text.substr(semi + 1);
    if (opt.rfind("copies=", 0) != 0) throw std::invalid_argument("unknown state spec option '" + opt + "'");
    spec.copies = std::stoi(opt.substr(7));
    if (spec.copies < 1) throw std::invalid_argument("copies must be >= 1");
  }
  auto colon = body.find(':');
  std::string fam = body.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : body.substr(colon + 1);
  if (fam == "iso" || fam == "isotropic") spec.family = "isotropic";
  else if (fam == "bell3" || fam == "bell" || fam == "bell_diag") spec.family = "bell_diag";
  else if (fam == "r" || fam == "r_state") spec.family = "r_state";
  else if (fam == "rotated_r" || fam == "rr") spec.family = "rotated_r";
  else if (fam == "s" || fam == "s_state") spec.family = "s_state";
  else if (fam == "epl") spec.family = "epl";
  else if (fam == "custom") spec.family = "custom";
  else throw std::invalid_argument("unknown state family '" + fam + "'");
  if (spec.family == "custom") {
    spec.path = args;
    return spec;
  }
  spec.params = parse_numbers(args, spec.family == "r_state" ? &spec.sign : nullptr);
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (spec.params.size() < lo || spec.params.size() > hi)
      throw std::invalid_argument("state family '" + spec.family + "' takes " + std::to_string(lo) +
                                  (lo == hi ? "" : "-" + std::to_string(hi)) + " parameters");
  };
  if (spec.family == "isotropic") need(1, 2);
  else if (spec.family == "bell_diag") need(3, 3);
  else if (spec.family == "epl") need(2, 2);
  else need(1, 1);
  return spec;
}

std::string to_string(const StateSpec& spec) {
  std::ostringstream os;
  auto num = [](double x) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, x);  // shortest round-trip form
    return std::string(buf, r.ptr);
  };
  std::string fam = spec.family == "bell_diag" ? "bell3" : spec.family;
  os << fam << ':';
  if (spec.family == "custom") os << spec.path;
  for (std::size_t i = 0; i < spec.params.size(); ++i) os << (i ? "," : "") << num(spec.params[i]);
  if (spec.family == "r_state" && spec.sign < 0) os << ",-";
  if (spec.copies != 1) os << ";copies=" << spec.copies;
  return os.str();
}

Operator make_state(const StateSpec& spec) {
  if (spec.family == "epl") {
    if (spec.copies != 1) throw std::invalid_argument("epl already describes two copies; copies must be 1");
    return epl_integrated(spec.params.at(0), spec.params.at(1));
  }
  if (spec.family == "custom") {
    std::ifstream in(spec.path);
    if (!in) throw std::invalid_argument("cannot open custom state file '" + spec.path + "'");
    nlohmann::json j;
    in >> j;
    Operator op = operator_from_json(j);
    Operator rho = make_density(op.layout(), op.mat());
    return spec.copies == 1 ? rho : tensor_copies(rho, spec.copies);
  }
  Operator single;
  if (spec.family == "isotropic")
    single = isotropic(spec.params.at(0), spec.params.size() > 1 ? static_cast<int>(spec.params[1]) : 2);
  else if (spec.family == "bell_diag") single = bell_diag(spec.params[0], spec.params[1], spec.params[2]);
  else if (spec.family == "r_state") single = r_state(spec.params.at(0), spec.sign);
  else if (spec.family == "rotated_r") single = rotated_r(spec.params.at(0));
  else if (spec.family == "s_state") single = s_state(spec.params.at(0));
  else throw std::invalid_argument("unknown state family '" + spec.family + "'");
  return spec.copies == 1 ? single : tensor_copies(single, spec.copies);
}

}  // namespace distil
