#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace probcoh {

class HttpTransport;

namespace cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidation = 2;
inline constexpr int kNetwork = 3;
inline constexpr int kInfeasibleFit = 4;
inline constexpr int kIo = 5;

struct Environment {
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
    // Overrides the HTTP transport used by `elicit` (tests).
    std::shared_ptr<HttpTransport> transport;
};

// args excludes the program name.
int run(const std::vector<std::string>& args, const Environment& env);

} // namespace cli
} // namespace probcoh
