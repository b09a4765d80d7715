#include "seasonal/features.hpp"

#include "seasonal/error.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>

namespace seasonal {

std::optional<RateVector> compute_rates(std::span<const std::uint64_t> day_counts) {
    std::uint64_t total = 0;
    for (auto c : day_counts) {
        total += c;
    }
    if (total == 0) {
        return std::nullopt;
    }
    const auto denom = static_cast<double>(total);
    RateVector rates(day_counts.size());
    for (std::size_t j = 0; j < day_counts.size(); ++j) {
        rates[j] = static_cast<double>(day_counts[j]) / denom;
    }
    return rates;
}

std::size_t FeatureDataset::positive_count() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const FeatureRow& r) { return r.label; }));
}

FeatureDataset build_dataset(const TrackCountTable& table, const LabelSet& labels,
                             const std::optional<WindowSpec>& expected_window) {
    if (expected_window && !(*expected_window == table.window())) {
        fail(ErrorCode::WindowMismatch, "count table window " + table.window().to_string() +
                                            " does not match configured window " +
                                            expected_window->to_string());
    }
    FeatureDataset out;
    out.window = table.window();
    for (const auto& id : table.sorted_track_ids()) {
        if (!labels.contains(id)) {
            ++out.excluded_unlabeled;
            continue;
        }
        auto rates = compute_rates(table.rows().at(id).day_counts);
        if (!rates) {
            ++out.excluded_undefined;
            continue;
        }
        out.rows.push_back(FeatureRow{id, std::move(*rates), labels.is_positive(id)});
    }
    return out;
}

void write_features(std::ostream& out, const FeatureDataset& dataset) {
    out << "# window=" << dataset.window.to_string() << '\n';
    out << "track_id\tlabel";
    for (int j = 0; j < dataset.window.span; ++j) {
        out << "\tr" << j;
    }
    out << '\n';
    char buf[32];
    for (const auto& row : dataset.rows) {
        out << row.track_id << '\t' << (row.label ? 1 : 0);
        for (double r : row.rates) {
            std::snprintf(buf, sizeof(buf), "%.17g", r);
            out << '\t' << buf;
        }
        out << '\n';
    }
}

FeatureDataset read_features(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || !line.starts_with("# window=")) {
        fail(ErrorCode::MalformedLine, "feature file must start with '# window=...'");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    FeatureDataset out;
    out.window = WindowSpec::parse(std::string_view(line).substr(9));
    const auto span = static_cast<std::size_t>(out.window.span);
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) {
                break;
            }
            start = tab + 1;
        }
        if (fields.size() != span + 2 || (fields[1] != "0" && fields[1] != "1")) {
            fail(ErrorCode::MalformedLine, "bad feature row '" + line + "'");
        }
        FeatureRow row{fields[0], RateVector(span), fields[1] == "1"};
        for (std::size_t j = 0; j < span; ++j) {
            try {
                row.rates[j] = std::stod(fields[j + 2]);
            } catch (const std::exception&) {
                fail(ErrorCode::MalformedLine, "bad rate '" + fields[j + 2] + "'");
            }
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

} // namespace seasonal
