#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace grasp::report {

class SchemaError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numeric CSV whose first column is "step"; "nan" cells are NaN.
struct MetricsTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;  // throws SchemaError
    std::vector<double> values(const std::string& name) const;
};

MetricsTable parse_metrics(const std::string& text, const std::string& source = "<csv>");
MetricsTable read_metrics(const std::filesystem::path& path);
std::string to_csv(const MetricsTable& table);

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;  // sample std (n - 1) / sqrt(n); 0 for one sample
    std::size_t n = 0;
};

// Ignores NaN entries; NaN mean when nothing is left.
MeanStderr mean_stderr(const std::vector<double>& xs);

// Per-step mean and standard error across seed tables sharing one schema.
// Columns: step, then <metric>_mean, <metric>_stderr, <metric>_n for every
// metric. Steps missing from some tables (early stops) use the tables that
// have them.
MetricsTable aggregate(const std::vector<MetricsTable>& seeds);

// Sample skewness m3 / m2^1.5 (0 when the spread is 0).
double skewness(const std::vector<double>& xs);

std::string format_number(double x);

}  // namespace grasp::report
