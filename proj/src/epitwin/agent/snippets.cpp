#include "epitwin/agent/snippets.hpp"

#include "epitwin/util/error.hpp"
#include "epitwin/util/fs.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace epitwin::agent {

namespace {

std::vector<std::string> tokenize(const std::string& text)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

} // namespace

SnippetStore SnippetStore::from_dir(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    if (fs::exists(dir))
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file() && entry.path().extension() == ".txt")
                files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<Snippet> snippets;
    for (const auto& f : files)
        snippets.push_back({f.stem().string(), read_file(f)});
    return from_snippets(std::move(snippets));
}

SnippetStore SnippetStore::from_snippets(std::vector<Snippet> snippets)
{
    SnippetStore store;
    store.docs_ = std::move(snippets);
    store.build_index();
    return store;
}

void SnippetStore::build_index()
{
    term_freq_.clear();
    doc_freq_.clear();
    lengths_.clear();
    long total = 0;
    for (const auto& doc : docs_) {
        std::map<std::string, int> tf;
        auto tokens = tokenize(doc.text);
        for (const auto& t : tokens)
            ++tf[t];
        for (const auto& [term, n] : tf)
            ++doc_freq_[term];
        lengths_.push_back(static_cast<int>(tokens.size()));
        total += static_cast<long>(tokens.size());
        term_freq_.push_back(std::move(tf));
    }
    avg_len_ = docs_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs_.size());
}

std::vector<Snippet> SnippetStore::retrieve(const std::string& query, std::size_t top_n) const
{
    if (docs_.empty())
        return {};
    constexpr double k1 = 1.2, b = 0.75;
    const double n_docs = static_cast<double>(docs_.size());

    auto qtokens = tokenize(query);
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        double score = 0.0;
        const auto& tf = term_freq_[i];
        const double len_norm =
            k1 * (1.0 - b + b * static_cast<double>(lengths_[i]) / std::fmax(avg_len_, 1.0));
        for (const auto& q : qtokens) {
            auto it = tf.find(q);
            if (it == tf.end())
                continue;
            auto df = doc_freq_.find(q);
            double idf = std::log(
                (n_docs - static_cast<double>(df->second) + 0.5) /
                    (static_cast<double>(df->second) + 0.5) +
                1.0);
            double f = static_cast<double>(it->second);
            score += idf * f * (k1 + 1.0) / (f + len_norm);
        }
        scored.emplace_back(score, i);
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b2) {
        if (a.first != b2.first)
            return a.first > b2.first;
        return docs_[a.second].id < docs_[b2.second].id;
    });
    std::vector<Snippet> out;
    for (std::size_t i = 0; i < scored.size() && i < top_n; ++i)
        out.push_back(docs_[scored[i].second]);
    return out;
}

} // namespace epitwin::agent
