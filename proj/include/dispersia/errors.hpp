#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dispersia {

// Base for everything thrown by the library.
struct error : std::runtime_error {
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// A parameter or function argument lies outside its mathematical domain.
struct parameter_error : error {
    explicit parameter_error(const std::string& what) : error(what) {}
};

// Input data violates a precondition (wrong support, NaN, too short, ...).
struct data_error : error {
    explicit data_error(const std::string& what) : error(what) {}
};

// An iterative solver exhausted its budget. Carries the last iterate so
// callers (and Monte Carlo drivers) can report what the solver saw.
struct convergence_error : error {
    convergence_error(const std::string& what, std::vector<double> iterate, int iters)
        : error(what), last_iterate(std::move(iterate)), iterations(iters) {}
    std::vector<double> last_iterate;
    int iterations = 0;
};

// The supplied variance function contradicts the supplied moments.
struct model_error : error {
    explicit model_error(const std::string& what) : error(what) {}
};

// Experiment configuration file violates the schema.
struct config_error : error {
    explicit config_error(const std::string& what) : error(what) {}
};

// Filesystem failure (open/read/write).
struct io_error : error {
    explicit io_error(const std::string& what) : error(what) {}
};

}  // namespace dispersia
