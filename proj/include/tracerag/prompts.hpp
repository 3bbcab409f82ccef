#pragma once

#include <string_view>

// Prompt template text. These strings are the canonical resources; the copies
// under resources/prompts/ must stay byte-identical (enforced by golden tests).
namespace tracerag::prompts {

inline constexpr std::string_view kStructural =
    "Instruction: Convert the reasoning trace into a concise step-by-step cheatsheet.\n"
    "\n"
    "Guidelines:\n"
    "- Use at most 7 steps.\n"
    "- Each step should represent a meaningful action.\n"
    "- Keep explanations short and clear.\n"
    "- Focus on reusable reasoning patterns.\n"
    "- Remove failed or irrelevant attempts.\n"
    "\n"
    "Output format:\n"
    "Problem: ...\n"
    "Step 1: ...\n"
    "...\n"
    "Step N: ...\n"
    "Answer: $\\boxed{[final answer]}$\n"
    "\n"
    "Given trace: {trace}";

inline constexpr std::string_view kSemantic =
    "Instruction: Compress the reasoning trace into progressively more abstract representations.\n"
    "\n"
    "Guidelines:\n"
    "- Provide three levels of abstraction.\n"
    "- Pass 1: structured outline of reasoning steps.\n"
    "- Pass 2: only key decisions or moves.\n"
    "- Pass 3: a single core insight.\n"
    "- Ensure consistency across all passes.\n"
    "- Avoid redundancy.\n"
    "\n"
    "Output format:\n"
    "Problem: ...\n"
    "Pass 1: ...\n"
    "Pass 2: ...\n"
    "Pass 3: ...\n"
    "Answer: $\\boxed{[final answer]}$\n"
    "\n"
    "Given trace: {trace}";

inline constexpr std::string_view kReflect =
    "Instruction: Extract failure patterns and negative knowledge from the reasoning trace.\n"
    "\n"
    "Guidelines:\n"
    "- Focus on common mistakes and misleading reasoning paths.\n"
    "- Explain why these mistakes are tempting.\n"
    "- Highlight how to detect and avoid them.\n"
    "- Provide contrast with the correct approach.\n"
    "- Do not reproduce the full solution.\n"
    "\n"
    "Output format:\n"
    "Problem: ...\n"
    "Common Mistakes: ...\n"
    "Misleading Intuitions: ...\n"
    "Critical Checks: ...\n"
    "Correct Approach (brief): ...\n"
    "Answer: $\\boxed{[final answer]}$\n"
    "\n"
    "Given trace: {trace}";

inline constexpr std::string_view kRagInstruction =
    "Instruction: Solve the main problem by using useful hints and strategies from the retrieved "
    "examples.";

inline constexpr std::string_view kTracePlaceholder = "{trace}";

}  // namespace tracerag::prompts
