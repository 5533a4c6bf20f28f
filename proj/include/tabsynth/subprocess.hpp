#pragma once

#include <string>
#include <vector>

#include "tabsynth/sampler.hpp"

namespace tabsynth {

/// Runs argv (no shell) and waits. Returns the exit status; throws plugin
/// error if the process cannot be started or dies on a signal.
int run_process(const std::vector<std::string>& argv);

/// Splits a plugin command line on whitespace, honoring double quotes.
std::vector<std::string> split_command(const std::string& command);

/// External generator: `/bin/sh -c <command>` kept alive for the whole run.
/// Each request writes the prompt as one line to the child's stdin and reads
/// one line (the completed sentence) back. A response that does not start
/// with the prompt gets the prompt prepended.
class PluginGenerator final : public TextGenerator {
public:
    explicit PluginGenerator(std::string command);
    ~PluginGenerator() override;
    PluginGenerator(const PluginGenerator&) = delete;
    PluginGenerator& operator=(const PluginGenerator&) = delete;

    std::string complete(const std::string& prompt, const SamplingConfig& cfg, std::uint64_t seed,
                         const ClauseGrammar* grammar = nullptr) override;

private:
    void shutdown() noexcept;

    std::string command_;
    int pid_ = -1;
    int toChild_ = -1;
    int fromChild_ = -1;
    std::string buffer_;
};

}  // namespace tabsynth
