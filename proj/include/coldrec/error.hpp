#pragma once

#include <stdexcept>
#include <string>

namespace coldrec {

// Base for every failure the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that can never be processed (missing file, bad config, invariant
// violation on caller-provided data).
class InputError : public Error {
 public:
  using Error::Error;
};

// The header plus target section alone already exceed the token budget.
class BudgetInfeasible : public Error {
 public:
  BudgetInfeasible(int budget, int minimal_budget)
      : Error("budget_infeasible: budget " + std::to_string(budget) +
              " is below the minimal feasible budget " +
              std::to_string(minimal_budget)),
        budget_(budget),
        minimal_budget_(minimal_budget) {}

  int budget() const { return budget_; }
  int minimal_budget() const { return minimal_budget_; }

 private:
  int budget_;
  int minimal_budget_;
};

}  // namespace coldrec
