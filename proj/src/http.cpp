// SPDX-License-Identifier: Apache-2.0
#include "featevo/http.hpp"

#include "featevo/agents.hpp"

#include <httplib.h>

#include <chrono>
#include <thread>

namespace featevo
{

namespace
{

struct Url
{
    std::string origin; // scheme://host[:port]
    std::string path;
};

Url split_url(const std::string& url)
{
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint url needs a scheme: '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

nlohmann::json http_post_json(const std::string& url, const nlohmann::json& body, const HttpPostOptions& options)
{
    const auto target = split_url(url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (target.origin.rfind("https://", 0) == 0)
        throw agents::TransportError("https endpoints need a build with OpenSSL: " + url);
#endif
    httplib::Client client(target.origin);
    client.set_connection_timeout(options.timeout_seconds, 0);
    client.set_read_timeout(options.timeout_seconds, 0);
    client.set_write_timeout(options.timeout_seconds, 0);
    httplib::Headers headers;
    if (!options.bearer_token.empty())
        headers.emplace("Authorization", "Bearer " + options.bearer_token);
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt)
    {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long long>(options.backoff_base_ms)
                                                                  << (attempt - 1)));
        auto res = client.Post(target.path, headers, payload, "application/json");
        if (!res)
        {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500 || res->status == 429)
        {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300)
            throw agents::TransportError("POST " + url + " returned status " + std::to_string(res->status) + ": " +
                                         res->body.substr(0, 500));
        try
        {
            return nlohmann::json::parse(res->body);
        }
        catch (const nlohmann::json::exception& e)
        {
            throw agents::TransportError("POST " + url + " returned a body that is not JSON: " + e.what());
        }
    }
    throw agents::TransportError("POST " + url + " failed after " + std::to_string(options.max_retries + 1) +
                                 " attempts (" + last_error + ")");
}

} // namespace featevo
