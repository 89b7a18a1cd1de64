#include "gpv/error.hpp"

namespace gpv {

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::validation: return 1;
        case ErrorKind::backend: return 2;
        case ErrorKind::missing_artifact: return 3;
    }
    return 1;
}

}  // namespace gpv
