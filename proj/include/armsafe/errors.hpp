#pragma once

#include <stdexcept>
#include <string>

namespace armsafe {

// Every error the library raises derives from Fault. name() is the stable
// identifier printed by the CLI on the diagnostic stream.
class Fault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* name() const noexcept = 0;
};

class InvalidParameter : public Fault {
 public:
  using Fault::Fault;
  const char* name() const noexcept override { return "invalid-parameter"; }
};

class InvalidModel : public Fault {
 public:
  using Fault::Fault;
  const char* name() const noexcept override { return "invalid-model"; }
};

class StepSizeFault : public Fault {
 public:
  using Fault::Fault;
  const char* name() const noexcept override { return "step-size-fault"; }
};

class DivergentSeries : public Fault {
 public:
  using Fault::Fault;
  const char* name() const noexcept override { return "divergent-series"; }
};

class SingularMassMatrix : public Fault {
 public:
  using Fault::Fault;
  const char* name() const noexcept override { return "singular-mass-matrix"; }
};

class ConfigError : public Fault {
 public:
  using Fault::Fault;
  const char* name() const noexcept override { return "config-error"; }
};

/// The simulated state left the finite range (e.g. an unstable gain choice).
class DivergentState : public Fault {
 public:
  using Fault::Fault;
  const char* name() const noexcept override { return "state-diverged"; }
};

/// Halfspace and box constraints have an empty intersection.
class InfeasibleQp : public Fault {
 public:
  InfeasibleQp(const std::string& what, double violation)
      : Fault(what), violation_(violation) {}
  const char* name() const noexcept override { return "qp-infeasible"; }
  /// Smallest achievable shortfall b - a·u over the box.
  double violation() const noexcept { return violation_; }

 private:
  double violation_;
};

/// a = 0 while the constraint 0 >= b is violated.
class DegenerateConstraint : public Fault {
 public:
  using Fault::Fault;
  const char* name() const noexcept override { return "degenerate-constraint"; }
};

/// A fault raised inside the simulation loop, tagged with the sample time.
class RuntimeFault : public Fault {
 public:
  RuntimeFault(const Fault& cause, double t)
      : Fault(std::string(cause.name()) + " at t=" + std::to_string(t) + ": " +
              cause.what()),
        cause_name_(cause.name()),
        t_(t) {}
  const char* name() const noexcept override { return cause_name_.c_str(); }
  double time() const noexcept { return t_; }

 private:
  std::string cause_name_;
  double t_;
};

}  // namespace armsafe
