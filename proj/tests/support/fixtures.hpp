#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dtlog/compiler.hpp"
#include "dtlog/kb.hpp"
#include "dtlog/parser.hpp"
#include "dtlog/runtime.hpp"

namespace dtlog::fixtures {

// The family example: three clauses over eight weighted facts.
inline constexpr std::string_view kFamilyFacts =
    "child\tliam\teve\t0.99\n"
    "child\tdave\teve\t0.99\n"
    "child\tliam\tbob\t0.75\n"
    "husband\teve\tbob\t0.9\n"
    "infant\tliam\t0.7\n"
    "infant\tdave\t0.1\n"
    "aunt\tjoe\teve\t0.9\n"
    "brother\teve\tchip\t0.9\n";

inline constexpr std::string_view kFamilyRules =
    "uncle(X,Y) :- child(X,W), brother(W,Y).\n"
    "uncle(X,Y) :- aunt(X,W), husband(W,Y).\n"
    "status(X,tired) :- child(W,X), infant(W).\n";

struct Compiled {
  Program program;
  FunctionRegistry registry;
};

// Every theory predicate in both modes.
std::vector<Target> all_targets(const Theory& theory);

Compiled compile(std::string_view rules, std::string_view facts, int max_depth = 10);
Compiled compile(std::string_view rules, KnowledgeBase kb, int max_depth = 10);
Compiled family(int max_depth = 10);

SparseVector unnormalized(const Compiled& c, std::string_view query);
double score(const Compiled& c, std::string_view query, std::string_view answer);

std::string grid_rules();

}  // namespace dtlog::fixtures
