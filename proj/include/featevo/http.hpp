// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <json.hpp>

namespace featevo
{

struct HttpPostOptions
{
    std::string bearer_token;
    int timeout_seconds = 60;
    /// Attempts after the first one; applies to 5xx and transport failures.
    int max_retries = 3;
    /// Delay before retry k (0-based) is backoff_base_ms * 2^k.
    int backoff_base_ms = 500;
};

/// POSTs a JSON body and returns the parsed JSON response. Throws the
/// TransportError of featevo::agents once retries are exhausted or on a
/// non-retryable status.
nlohmann::json http_post_json(const std::string& url, const nlohmann::json& body, const HttpPostOptions& options);

} // namespace featevo
