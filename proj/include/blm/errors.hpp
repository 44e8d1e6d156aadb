#pragma once

#include <stdexcept>
#include <string>

namespace blm {

// Exit-code mapping lives in the CLI: config=2, data/schema=3, numeric/reward=4.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RewardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace blm
