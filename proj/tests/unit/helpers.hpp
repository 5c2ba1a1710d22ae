#ifndef COGBIAS_TESTS_HELPERS_HPP
#define COGBIAS_TESTS_HELPERS_HPP

#include <map>
#include <string>
#include <vector>

#include "cogbias/io/csv.hpp"
#include "cogbias/types.hpp"

namespace testing_support {

inline cogbias::ScoreMatrix bundled_matrix() {
    auto olmo = cogbias::io::read_score_matrix(COGBIAS_DATA_DIR "/olmo_scores.csv");
    auto t5 = cogbias::io::read_score_matrix(COGBIAS_DATA_DIR "/t5_scores.csv");
    return olmo.concat_columns(t5);
}

inline std::vector<cogbias::ModelRun> roster_of(const cogbias::ScoreMatrix& m) {
    std::vector<cogbias::ModelRun> out;
    for (const auto& c : m.cols()) {
        out.push_back(cogbias::parse_run_id(c));
    }
    return out;
}

/** Rows of a small fixture CSV keyed by the first column. */
inline std::map<std::string, std::vector<std::string>> fixture(const std::string& name) {
    auto text = cogbias::io::read_text_file(std::string(COGBIAS_TEST_DATA_DIR "/") + name);
    std::map<std::string, std::vector<std::string>> out;
    std::size_t pos = 0, line = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        auto cells = cogbias::io::split_csv_line(text.substr(pos, end - pos), ++line);
        pos = end == std::string::npos ? text.size() : end + 1;
        if (line == 1) {
            continue;
        }
        auto key = cogbias::io::trim(cells[0]);
        cells.erase(cells.begin());
        out[key] = cells;
    }
    return out;
}

}

#endif
