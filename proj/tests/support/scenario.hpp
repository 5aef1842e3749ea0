// SPDX-License-Identifier: Apache-2.0
// Scripted-transcript fixtures over the planted churn dataset.
#pragma once

#include "featevo/orchestrator.hpp"
#include "featevo/synthetic.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace featevo::fixture
{

/// Wraps an output object in the agents' reply format.
std::string reply(const nlohmann::json& output, const std::string& prose = "Here is my answer.");
std::string accept_reply();
std::string reject_reply(const std::string& feedback);
std::string feature_reply(const std::string& name, const std::string& summary, const std::string& pseudocode);
std::string code_reply(const std::string& program);
std::string idea_reply(const std::string& insight, const std::vector<int>& parents = {});
std::string text_reply(const std::string& text);

/// Appends numbered transcript files per role and optional scope.
class TranscriptWriter
{
public:
    explicit TranscriptWriter(std::filesystem::path dir);

    void add(const std::string& role, const std::string& scope, const std::string& text);
    int count(const std::string& role, const std::string& scope) const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::map<std::string, int> next_;
};

/// One ProposeFeature visit to an idea, as the scripted agents play it.
struct Visit
{
    std::string name;
    std::string summary;
    /// The new definition; prior accepted definitions are prepended.
    std::string definition;
    /// Expected to raise the idea's metric; later programs keep it.
    bool accepted = false;
    /// Idea critic rejects the first proposal once.
    bool critic_rejects_first = false;
    /// Code attempts that fail the mechanical check, then valid attempts the
    /// code critic rejects; the visit forfeits once they reach max_z.
    int broken_code_attempts = 0;
    int critic_code_rejections = 0;
};

/// Writes every scoped transcript for one idea's visits.
void write_idea_visits(TranscriptWriter& w, int idea_id, const std::vector<Visit>& visits, int max_z);

/// Constant-valued definitions that can never change a metric.
std::vector<Visit> filler_visits(int count, const std::string& prefix);

struct Fixture
{
    std::filesystem::path root;
    synth::GeneratedFiles data;
    std::filesystem::path transcripts;
    orch::RunConfig config;
};

/// Planted-signal run: two prior ideas, idea creation and synthesis enabled,
/// a code forfeit and constant features that are rejected.
Fixture planted_fixture(const std::filesystem::path& root, std::uint64_t seed);

/// Decoy fixture for the selection ablation: the planted feature is the
/// second feature of idea 0, three decoy ideas carry noise features.
Fixture decoy_fixture(const std::filesystem::path& root, std::uint64_t seed);

/// Fresh empty directory under the system temp dir.
std::filesystem::path fresh_dir(const std::string& name);

} // namespace featevo::fixture
