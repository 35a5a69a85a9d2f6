#include "grasp/report/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace grasp::report {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::size_t MetricsTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw SchemaError("no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> MetricsTable::values(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

MetricsTable parse_metrics(const std::string& text, const std::string& source) {
    MetricsTable t;
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line)) throw SchemaError(source + ": empty file");
    t.columns = split(line);
    if (t.columns.empty() || t.columns.front() != "step") {
        throw SchemaError(source + ": first column must be 'step'");
    }
    int number = 1;
    while (std::getline(ss, line)) {
        ++number;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (cells.size() != t.columns.size()) {
            throw SchemaError(source + ":" + std::to_string(number) + ": expected " + std::to_string(t.columns.size()) +
                              " cells, got " + std::to_string(cells.size()));
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            if (c == "nan" || c == "NaN" || c.empty()) {
                row.push_back(nan_value);
                continue;
            }
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
                if (used != c.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw SchemaError(source + ":" + std::to_string(number) + ": not a number: '" + c + "'");
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

MetricsTable read_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_metrics(ss.str(), path.string());
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string to_csv(const MetricsTable& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += "\n";
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format_number(r[i]);
        out += "\n";
    }
    return out;
}

MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr out;
    double sum = 0.0;
    for (double x : xs) {
        if (std::isnan(x)) continue;
        sum += x;
        out.n += 1;
    }
    if (out.n == 0) {
        out.mean = out.stderr_ = nan_value;
        return out;
    }
    const double n = static_cast<double>(out.n);
    out.mean = sum / n;
    if (out.n > 1) {
        double ss = 0.0;
        for (double x : xs) {
            if (!std::isnan(x)) ss += (x - out.mean) * (x - out.mean);
        }
        out.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return out;
}

MetricsTable aggregate(const std::vector<MetricsTable>& seeds) {
    if (seeds.empty()) throw SchemaError("aggregate: no tables");
    for (const auto& s : seeds) {
        if (s.columns != seeds.front().columns) throw SchemaError("aggregate: tables do not share a metric schema");
    }
    const auto& cols = seeds.front().columns;
    MetricsTable out;
    out.columns.push_back("step");
    for (std::size_t c = 1; c < cols.size(); ++c) {
        out.columns.push_back(cols[c] + "_mean");
        out.columns.push_back(cols[c] + "_stderr");
        out.columns.push_back(cols[c] + "_n");
    }
    std::map<double, std::vector<const std::vector<double>*>> by_step;
    for (const auto& s : seeds) {
        for (const auto& r : s.rows) by_step[r[0]].push_back(&r);
    }
    for (const auto& [step, rows] : by_step) {
        std::vector<double> row{step};
        for (std::size_t c = 1; c < cols.size(); ++c) {
            std::vector<double> xs;
            for (const auto* r : rows) xs.push_back((*r)[c]);
            const MeanStderr m = mean_stderr(xs);
            row.push_back(m.mean);
            row.push_back(m.stderr_);
            row.push_back(static_cast<double>(m.n));
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

double skewness(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (m2 <= 0.0) return 0.0;
    return m3 / std::pow(m2, 1.5);
}

}  // namespace grasp::report
