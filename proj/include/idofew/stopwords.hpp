#pragma once

#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "idofew/errors.hpp"

namespace idofew {

// Fixed English stop-word list. Contractions appear with their apostrophes
// stripped ("dont", "youre") because stop-word removal runs after punctuation
// stripping. The same list ships as data/stopwords_en.txt, one word per line;
// the two must stay in sync (checked by a test).
inline const std::vector<std::string>& stopword_list() {
    static const std::vector<std::string> words = {
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
        "any", "are", "arent", "as", "at", "be", "because", "been", "before", "being",
        "below", "between", "both", "but", "by", "cannot", "cant", "could", "couldnt",
        "did", "didnt", "do", "does", "doesnt", "doing", "dont", "down", "during",
        "each", "few", "for", "from", "further", "had", "hadnt", "has", "hasnt",
        "have", "havent", "having", "he", "hed", "hell", "her", "here", "heres",
        "hers", "herself", "hes", "him", "himself", "his", "how", "hows", "i", "id",
        "if", "ill", "im", "in", "into", "is", "isnt", "it", "its", "itself", "ive",
        "lets", "me", "more", "most", "mustnt", "my", "myself", "no", "nor", "not",
        "of", "off", "on", "once", "only", "or", "other", "ought", "our", "ours",
        "ourselves", "out", "over", "own", "same", "shant", "she", "shed", "shell",
        "shes", "should", "shouldnt", "so", "some", "such", "than", "that", "thats",
        "the", "their", "theirs", "them", "themselves", "then", "there", "theres",
        "these", "they", "theyd", "theyll", "theyre", "theyve", "this", "those",
        "through", "to", "too", "under", "until", "up", "very", "was", "wasnt", "we",
        "wed", "well", "were", "werent", "weve", "what", "whats", "when", "whens",
        "where", "wheres", "which", "while", "who", "whom", "whos", "why", "whys",
        "with", "wont", "would", "wouldnt", "you", "youd", "youll", "your", "youre",
        "yours", "yourself", "yourselves", "youve",
    };
    return words;
}

inline const std::unordered_set<std::string>& builtin_stopwords() {
    static const std::unordered_set<std::string> set(stopword_list().begin(),
                                                     stopword_list().end());
    return set;
}

// Reads a stop-word file: one lowercase word per line, blank lines ignored.
inline std::unordered_set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stop-word file: " + path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) words.insert(line);
    }
    return words;
}

}  // namespace idofew
