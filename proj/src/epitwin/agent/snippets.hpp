#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace epitwin::agent {

struct Snippet {
    std::string id;
    std::string text;
};

/// Lexical snippet retrieval (BM25 over whitespace/alnum tokens).
/// Deterministic: ties break on identifier order. The interface is
/// what an embedding backend would also satisfy.
class SnippetStore {
public:
    SnippetStore() = default;
    static SnippetStore from_dir(const std::filesystem::path& dir); // *.txt, sorted by name
    static SnippetStore from_snippets(std::vector<Snippet> snippets);

    std::vector<Snippet> retrieve(const std::string& query, std::size_t top_n = 3) const;
    std::size_t size() const { return docs_.size(); }

private:
    void build_index();

    std::vector<Snippet> docs_;
    std::vector<std::map<std::string, int>> term_freq_;
    std::map<std::string, int> doc_freq_;
    double avg_len_ = 0.0;
    std::vector<int> lengths_;
};

} // namespace epitwin::agent
