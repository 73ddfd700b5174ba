#include "robustgw/penalty.hpp"

#include <cmath>
#include <limits>

#include "robustgw/errors.hpp"

namespace robustgw {

double pow_abs(double x, double p) {
  const double a = std::fabs(x);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  if (p == 3.0) return a * a * a;
  if (p == 4.0) {
    const double s = a * a;
    return s * s;
  }
  return std::pow(a, p);
}

RobustPenalty::RobustPenalty(PenaltyKind kind, double p, double tau)
    : kind_(kind), p_(p), tau_(tau), tau_p_(0.0), int_p_(0) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("penalty exponent p must be finite and >= 1");
  if (std::isnan(tau) || tau < 0.0) throw InvalidArgument("penalty threshold must be >= 0");
  if (p == 1.0) int_p_ = 1;
  if (p == 2.0) int_p_ = 2;
  tau_p_ = std::isinf(tau) ? tau : pow_abs(tau, p);
}

RobustPenalty RobustPenalty::squared(double p) {
  return RobustPenalty(PenaltyKind::SquaredP, p, std::numeric_limits<double>::infinity());
}

RobustPenalty RobustPenalty::tukey(double p, double tau) { return RobustPenalty(PenaltyKind::Tukey, p, tau); }

RobustPenalty RobustPenalty::huber(double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("Huber threshold tau must be > 0");
  if (!std::isfinite(tau)) throw InvalidArgument("Huber threshold tau must be finite");
  return RobustPenalty(PenaltyKind::Huber, 2.0, tau);
}

RobustPenalty RobustPenalty::truncate(double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("truncation level lambda must be > 0");
  return RobustPenalty(PenaltyKind::Truncate, 1.0, lambda);
}

double RobustPenalty::root_exponent() const {
  switch (kind_) {
    case PenaltyKind::SquaredP:
    case PenaltyKind::Tukey:
      return p_;
    case PenaltyKind::Huber:
      return 2.0;
    case PenaltyKind::Truncate:
      return 1.0;
  }
  return 1.0;
}

std::string RobustPenalty::name() const { return to_string(kind_); }

RobustPenalty RobustPenalty::with_tau(double tau) const {
  switch (kind_) {
    case PenaltyKind::Tukey:
      return tukey(p_, tau);
    case PenaltyKind::Huber:
      return huber(tau);
    case PenaltyKind::Truncate:
      return truncate(tau);
    case PenaltyKind::SquaredP:
      break;
  }
  throw InvalidArgument("squared penalty has no threshold");
}

std::string to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::SquaredP:
      return "squared";
    case PenaltyKind::Tukey:
      return "tukey";
    case PenaltyKind::Huber:
      return "huber";
    case PenaltyKind::Truncate:
      return "truncate";
  }
  return "unknown";
}

PenaltyKind penalty_kind_from_string(const std::string& name) {
  if (name == "squared" || name == "squaredp" || name == "gw") return PenaltyKind::SquaredP;
  if (name == "tukey" || name == "tgw") return PenaltyKind::Tukey;
  if (name == "huber" || name == "hgw") return PenaltyKind::Huber;
  if (name == "truncate" || name == "lrgw") return PenaltyKind::Truncate;
  throw InvalidArgument("unknown penalty: " + name);
}

}  // namespace robustgw
