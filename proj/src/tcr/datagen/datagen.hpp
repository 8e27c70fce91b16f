#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tcr/common/io.hpp"
#include "tcr/datagen/lexicon.hpp"

namespace tcr::datagen {

struct KnowledgeTriple {
  std::string id;
  std::string subject;
  Relation relation = Relation::capital_of;
  std::string object;
};

enum class Split { train, dev, test };

const char* to_string(Split s);
std::optional<Split> split_from_string(std::string_view s);

struct ConflictTriple {
  KnowledgeTriple base;
  std::string statement;
  std::string paraphrase;
  std::string contradiction;
  std::string unrelated;
  Split split = Split::train;
};

using TripleSet = std::vector<ConflictTriple>;

enum class ContextType { golden, conflicting, irrelevant };

const char* to_string(ContextType t);
std::optional<ContextType> context_type_from_string(std::string_view s);

struct QACase {
  std::string id;
  std::string question;
  std::string gold_answer;
  std::string context;
  ContextType context_type = ContextType::golden;
  bool closed_book_correct = false;
  std::string closed_book_answer;  // simulated parametric answer
};

std::vector<KnowledgeTriple> sample_triples(std::size_t n, std::uint64_t seed);

ConflictTriple make_variants(const KnowledgeTriple& t, const std::vector<KnowledgeTriple>& pool,
                             std::uint64_t seed);

TripleSet build_dataset(std::size_t n, std::uint64_t seed, std::array<double, 3> split_ratios = {0.8, 0.1, 0.1});

struct QaOptions {
  std::array<double, 3> mix = {0.4, 0.3, 0.3};  // golden, conflicting, irrelevant
  double noise_rate = 0.0;                      // probability of appending a distractor sentence
  double knowledge_rate = 0.5;                  // P(closed_book_correct)
  std::size_t cases_per_triple = 1;
  std::optional<Split> split = Split::test;     // nullopt: all triples
  std::uint64_t seed = 42;
};

std::vector<QACase> build_qa_cases(const TripleSet& ts, const QaOptions& opts);

ojson to_json(const ConflictTriple& t);
ConflictTriple triple_from_json(const json& j);
ojson to_json(const QACase& c);
QACase qa_case_from_json(const json& j);

std::string triples_to_jsonl(const TripleSet& ts);
std::string qa_cases_to_jsonl(const std::vector<QACase>& cases);
TripleSet read_triples_jsonl(const std::string& path);
std::vector<QACase> read_qa_jsonl(const std::string& path);

}  // namespace tcr::datagen
