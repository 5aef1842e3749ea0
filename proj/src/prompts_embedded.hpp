// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace featevo::agents
{

/// Template text compiled in from prompts/<name>.txt; throws ConfigError for unknown names.
std::string builtin_prompt(const std::string& name);

} // namespace featevo::agents
