#pragma once

#include <string_view>

namespace babo {

/// Writes "warning: <msg>" to stderr unless warnings are silenced.
void log_warning(std::string_view message);
void set_warnings_enabled(bool enabled);

}  // namespace babo
