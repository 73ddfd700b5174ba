#pragma once

#include <string>

namespace robustgw {

enum class PenaltyKind { SquaredP, Tukey, Huber, Truncate };

/// |x|^p, exact repeated multiplication for small integer p.
double pow_abs(double x, double p);

/// Scalar penalty applied to distance discrepancies.
///
/// SquaredP: |x|^p. Tukey: min(|x|, tau)^p. Huber: quadratic below tau,
/// linear above. Truncate: min(|x|, lambda).
class RobustPenalty {
 public:
  static RobustPenalty squared(double p = 2.0);
  static RobustPenalty tukey(double p, double tau);
  static RobustPenalty huber(double tau);
  static RobustPenalty truncate(double lambda);

  double operator()(double x) const {
    const double a = x < 0 ? -x : x;
    switch (kind_) {
      case PenaltyKind::SquaredP:
        return int_p_ == 2 ? a * a : (int_p_ == 1 ? a : pow_abs(a, p_));
      case PenaltyKind::Tukey:
        if (a > tau_) return tau_p_;
        return int_p_ == 2 ? a * a : (int_p_ == 1 ? a : pow_abs(a, p_));
      case PenaltyKind::Huber:
        return a <= tau_ ? a * a / (2.0 * tau_) : a - 0.5 * tau_;
      case PenaltyKind::Truncate:
        return a < tau_ ? a : tau_;
    }
    return 0.0;
  }

  PenaltyKind kind() const { return kind_; }
  double p() const { return p_; }
  /// Threshold: tau for Tukey/Huber, lambda for Truncate, +inf for SquaredP.
  double tau() const { return tau_; }
  /// 1 or 2 when p is that integer, 0 otherwise.
  int integer_p() const { return int_p_; }
  /// Exponent used to turn a cost into a distance (cost^(1/r)).
  double root_exponent() const;
  std::string name() const;
  /// Same kind and p with a new threshold. Not defined for SquaredP.
  RobustPenalty with_tau(double tau) const;

  bool operator==(const RobustPenalty&) const = default;

 private:
  RobustPenalty(PenaltyKind kind, double p, double tau);

  PenaltyKind kind_;
  double p_;
  double tau_;
  double tau_p_;
  int int_p_;
};

PenaltyKind penalty_kind_from_string(const std::string& name);
std::string to_string(PenaltyKind kind);

}  // namespace robustgw
