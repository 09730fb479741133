/*
   Copyright 2026 The treestm Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#ifndef TREESTM_CORPUS_HPP
#define TREESTM_CORPUS_HPP

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace treestm {

// Dense token <-> id map. Tokens are opaque byte strings; no normalization
// happens here so the vocabulary size is exactly what the input dictates.
struct Vocabulary {
  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, int> token_to_id;

  int size() const { return static_cast<int>(id_to_token.size()); }

  // Returns the id, inserting in first-appearance order.
  int add(const std::string& token) {
    auto it = token_to_id.find(token);
    if (it != token_to_id.end()) return it->second;
    int id = size();
    id_to_token.push_back(token);
    token_to_id.emplace(token, id);
    return id;
  }

  // -1 if absent.
  int lookup(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? -1 : it->second;
  }
};

// One dependency-parsed document: word ids plus a parent index per word
// forming a single rooted tree. parent[n] == kRoot marks the root.
// N = 0 documents are legal in memory (they carry only the prior part of
// the bound) but have no representation in the text format.
struct DepDocument {
  static constexpr int kRoot = -1;

  std::vector<int> words;
  std::vector<int> parent;
  std::vector<std::vector<int>> children;  // derived from parent
  int root = kRoot;

  int size() const { return static_cast<int>(words.size()); }

  // Rebuild children/root from parent. Does not validate; call
  // validate_tree first on untrusted input.
  void rebuild_children();
};

struct Corpus {
  std::vector<DepDocument> documents;
  Vocabulary vocabulary;
};

// Checks every DepDocument invariant; each violation names the rule and the
// offending word index. Empty documents are vacuously valid.
std::vector<std::string> validate_tree(const DepDocument& doc);

// Reads the corpus text format:
//   - one word per line: `index token parent_index` (whitespace separated)
//   - indices 1-based and contiguous within a document; parent 0 is root
//   - documents separated by blank lines; `#` lines are comments
// Throws ParseError (with line number) or TreeValidationError.
Corpus parse_corpus(std::istream& in);

// Inverse of parse_corpus for documents with N >= 1; token order and parent
// indices round-trip exactly.
void serialize_corpus(const Corpus& corpus, std::ostream& out);

// Parents-before-children order, lowest available index first.
std::vector<int> topological_order(const DepDocument& doc);

}  // namespace treestm

#endif
