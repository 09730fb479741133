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
#include "treestm/corpus.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>

#include "treestm/errors.hpp"

namespace treestm {

void DepDocument::rebuild_children() {
  int n = size();
  children.assign(n, {});
  root = kRoot;
  for (int i = 0; i < n; ++i) {
    if (parent[i] == kRoot) {
      root = i;
    } else if (parent[i] >= 0 && parent[i] < n) {
      children[parent[i]].push_back(i);
    }
  }
}

std::vector<std::string> validate_tree(const DepDocument& doc) {
  std::vector<std::string> violations;
  const int n = doc.size();
  if (static_cast<int>(doc.parent.size()) != n) {
    violations.push_back("parent list length differs from word count");
    return violations;
  }
  if (n == 0) return violations;

  int roots = 0;
  for (int i = 0; i < n; ++i) {
    int p = doc.parent[i];
    if (p == DepDocument::kRoot) {
      ++roots;
      if (roots > 1) violations.push_back("multiple roots (word " + std::to_string(i) + ")");
    } else if (p == i) {
      violations.push_back("self-parent (word " + std::to_string(i) + ")");
    } else if (p < 0 || p >= n) {
      violations.push_back("parent out of range (word " + std::to_string(i) + ")");
    }
  }
  if (roots == 0) violations.push_back("no root");
  if (!violations.empty()) return violations;

  // Walk each parent chain; with exactly one root and in-range parents the
  // only remaining failure mode is a cycle.
  std::vector<int> state(n, 0);  // 0 unseen, 1 on current path, 2 done
  for (int i = 0; i < n; ++i) {
    if (state[i] != 0) continue;
    std::vector<int> path;
    int v = i;
    while (v != DepDocument::kRoot && state[v] == 0) {
      state[v] = 1;
      path.push_back(v);
      v = doc.parent[v];
    }
    if (v != DepDocument::kRoot && state[v] == 1) {
      violations.push_back("cycle detected (word " + std::to_string(v) + ")");
      for (int u : path) state[u] = 2;
      return violations;
    }
    for (int u : path) state[u] = 2;
  }
  return violations;
}

namespace {

struct RawWord {
  std::string token;
  int parent_1based;
};

DepDocument finish_document(std::vector<RawWord>& raw, Vocabulary& vocab,
                            int doc_index) {
  DepDocument doc;
  const int n = static_cast<int>(raw.size());
  doc.words.reserve(n);
  doc.parent.reserve(n);
  for (const RawWord& w : raw) {
    doc.words.push_back(vocab.add(w.token));
    if (w.parent_1based == 0) {
      doc.parent.push_back(DepDocument::kRoot);
    } else {
      doc.parent.push_back(w.parent_1based - 1);
    }
  }
  auto violations = validate_tree(doc);
  if (!violations.empty()) {
    throw TreeValidationError(doc_index, violations.front());
  }
  doc.rebuild_children();
  raw.clear();
  return doc;
}

bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::vector<RawWord> raw;
  std::string line;
  int line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line[0] == '#') continue;
    if (is_blank(line)) {
      if (!raw.empty()) {
        corpus.documents.push_back(finish_document(
            raw, corpus.vocabulary, static_cast<int>(corpus.documents.size())));
      }
      continue;
    }
    std::istringstream fields(line);
    int index = 0;
    RawWord w;
    if (!(fields >> index >> w.token >> w.parent_1based)) {
      throw ParseError(line_no, "expected `index token parent_index`");
    }
    std::string extra;
    if (fields >> extra) {
      throw ParseError(line_no, "trailing field `" + extra + "`");
    }
    int expected = static_cast<int>(raw.size()) + 1;
    if (index != expected) {
      throw ParseError(line_no, "index " + std::to_string(index) +
                                    " out of order (expected " +
                                    std::to_string(expected) + ")");
    }
    if (w.parent_1based < 0) {
      throw ParseError(line_no, "negative parent index");
    }
    raw.push_back(std::move(w));
  }
  if (!raw.empty()) {
    corpus.documents.push_back(finish_document(
        raw, corpus.vocabulary, static_cast<int>(corpus.documents.size())));
  }
  if (corpus.documents.empty()) {
    throw ParseError(line_no, "corpus contains no documents");
  }
  return corpus;
}

void serialize_corpus(const Corpus& corpus, std::ostream& out) {
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const DepDocument& doc = corpus.documents[d];
    if (d > 0) out << "\n";
    for (int n = 0; n < doc.size(); ++n) {
      int parent = doc.parent[n] == DepDocument::kRoot ? 0 : doc.parent[n] + 1;
      out << (n + 1) << ' ' << corpus.vocabulary.id_to_token[doc.words[n]]
          << ' ' << parent << "\n";
    }
  }
}

std::vector<int> topological_order(const DepDocument& doc) {
  std::vector<int> order;
  order.reserve(doc.size());
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  if (doc.root != DepDocument::kRoot) ready.push(doc.root);
  while (!ready.empty()) {
    int n = ready.top();
    ready.pop();
    order.push_back(n);
    for (int c : doc.children[n]) ready.push(c);
  }
  return order;
}

}  // namespace treestm
