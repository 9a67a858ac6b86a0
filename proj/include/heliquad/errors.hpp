#pragma once

#include <stdexcept>
#include <string>

namespace heliquad {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- mechanism ---

// Four-bar loop cannot close at the requested servo angle (|C| > 1).
struct Unassemblable : Error {
    Unassemblable(double xi_rad, double c)
        : Error("mechanism unassemblable at xi=" + std::to_string(xi_rad) +
                " rad (C=" + std::to_string(c) + ")"),
          xi(xi_rad), C(c) {}
    double xi;
    double C;
};

// No pitch solution on the selected branch (|A| > sqrt(P^2+Q^2)).
struct NoBranchSolution : Error {
    explicit NoBranchSolution(double xi_rad)
        : Error("no branch solution at xi=" + std::to_string(xi_rad) + " rad"), xi(xi_rad) {}
    double xi;
};

// Links 3 and 4 collinear: det(K) ~ 0, passive rates unbounded.
struct SingularConfiguration : Error {
    explicit SingularConfiguration(double sin_eta3)
        : Error("singular configuration: sin(eta3)=" + std::to_string(sin_eta3)) {}
};

// Requested singular pose lies outside the reachable workspace.
struct NotReachable : Error {
    explicit NotReachable(const std::string& which)
        : Error("singular pitch not reachable: " + which) {}
};

struct DegenerateLinks : Error {
    explicit DegenerateLinks(const std::string& msg) : Error("degenerate links: " + msg) {}
};

struct OutOfRange : Error {
    explicit OutOfRange(const std::string& msg) : Error("out of range: " + msg) {}
};

// --- propeller ---

struct NoConvergence : Error {
    NoConvergence(int element_index, double residual_N)
        : Error("inflow solve did not converge at element " + std::to_string(element_index) +
                " (residual " + std::to_string(residual_N) + " N)"),
          element(element_index), residual(residual_N) {}
    int element;
    double residual;
};

struct ThrustNearZero : Error {
    explicit ThrustNearZero(double thrust_N)
        : Error("k_tau undefined: |T|=" + std::to_string(thrust_N) + " N below floor"),
          thrust(thrust_N) {}
    double thrust;
};

struct NoSignChange : Error {
    explicit NoSignChange(const std::string& msg) : Error("no sign change: " + msg) {}
};

// --- allocation / training ---

struct SingularAllocation : Error {
    SingularAllocation(int mu_idx, const std::string& detail)
        : Error("allocation matrix not invertible (mu=" + std::to_string(mu_idx) + "): " + detail),
          mu(mu_idx) {}
    int mu;
};

struct NonFinite : Error {
    explicit NonFinite(const std::string& msg) : Error("non-finite data: " + msg) {}
};

struct DegenerateNormalization : Error {
    explicit DegenerateNormalization(const std::string& msg)
        : Error("degenerate normalization: " + msg) {}
};

// --- harness / io ---

struct EmptyWindow : Error {
    explicit EmptyWindow(const std::string& msg) : Error("empty metrics window: " + msg) {}
};

struct ParseError : Error {
    ParseError(const std::string& file, int line, const std::string& msg)
        : Error(file + ":" + std::to_string(line) + ": " + msg), line_number(line) {}
    int line_number;
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace heliquad
