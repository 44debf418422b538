#ifndef ABSA_TOOLS_COMMANDS_HPP_
#define ABSA_TOOLS_COMMANDS_HPP_

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "absa/data.hpp"

namespace absa::tools {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point shared by the binary and the tests. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// ".xml" files are SemEval XML; anything else is JSON lines.
std::vector<AnnotatedSentence> load_sentences(const std::filesystem::path& path);

}  // namespace absa::tools

#endif  // ABSA_TOOLS_COMMANDS_HPP_
