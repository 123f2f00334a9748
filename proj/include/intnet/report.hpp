#pragma once

// JSON reports and CSV tables.  Big integers are written as decimal strings
// with their digit count; exact rationals as "p/q" next to a decimal value.

#include "intnet/approximator.hpp"
#include "intnet/kronecker.hpp"
#include "intnet/regression.hpp"

#include <json.hpp>

#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace intnet {

using json = nlohmann::ordered_json;

inline json big_json(const BigInt& v) { return json{{"value", v.str()}, {"digits", decimal_digits(v)}}; }

inline json rational_json(const Rational& v)
{
    return json{{"exact", v.str()}, {"decimal", rational_to_double(v)}};
}

inline json to_json(const SearchResult& r)
{
    return json{{"status", "found"},
                {"q", r.q.str()},
                {"discrepancy_upper", rational_json(r.discrepancy_upper)},
                {"scanned", r.scanned.str()},
                {"precision_bits", r.precision_bits},
                {"strategy", to_string(r.strategy)},
                {"q_cap", big_json(r.q_cap)}};
}

inline json to_json(const NotFound& nf)
{
    return json{{"status", "not_found"},
                {"strategy", to_string(nf.strategy)},
                {"scanned", nf.scanned.str()},
                {"scanned_range", {{"min", BigInt(-nf.max_magnitude).str()}, {"max", nf.max_magnitude.str()}}},
                {"q_cap", big_json(nf.q_cap)},
                {"eps", rational_json(nf.eps)}};
}

inline json to_json(const ApproximationReport& r)
{
    return json{{"eps", rational_json(r.eps)},
                {"M", r.M},
                {"N", r.N},
                {"inner_tolerance", rational_json(r.inner_tolerance)},
                {"q", r.q.str()},
                {"q_bound", big_json(r.q_bound)},
                {"sup_error_grid", r.sup_error_grid},
                {"grid_resolution", r.grid_resolution},
                {"analytic_bound", r.analytic_bound},
                {"max_anchor_error", r.max_anchor_error},
                {"search", to_json(r.search)}};
}

inline json to_json(const FitResult& r)
{
    return json{{"q_hat", r.q_hat.str()}, {"risk", r.risk}, {"scanned", r.scanned.str()}, {"M", r.M}, {"N", r.N}};
}

inline json to_json(const Schedule& s)
{
    return json{{"M_n", s.M}, {"N_n", s.N}, {"Q_n", s.Q.str()}, {"Q_n_digits", s.Q_digits}};
}

inline json to_json(const RateReport& rep)
{
    json rows = json::array();
    for (const RateRow& row : rep.rows) {
        json runs = json::array();
        for (const RateRun& run : row.runs) {
            json j{{"seed", run.seed},
                   {"q_hat", run.q_hat.str()},
                   {"empirical_risk", run.empirical_risk},
                   {"prediction_error", run.prediction_error},
                   {"prediction_se", run.prediction_se}};
            if (!run.error.empty()) j["error"] = run.error;
            runs.push_back(std::move(j));
        }
        rows.push_back(json{{"n", row.n},
                            {"schedule", to_json(row.schedule)},
                            {"q_cap", big_json(row.q_cap)},
                            {"mean_pred_err", row.mean_prediction_error},
                            {"sd_pred_err", row.sd_prediction_error},
                            {"delta", row.delta},
                            {"log2_cover", row.log2_cover},
                            {"risk_bound", row.risk_bound},
                            {"runs", std::move(runs)}});
    }
    json out{{"theoretical_exponent", rep.theoretical_exponent},
             {"fitted_slope", rep.fitted_slope ? json(*rep.fitted_slope) : json(nullptr)},
             {"expectation_note",
              "prediction error is a Monte-Carlo estimate over fresh X for one training draw per seed, "
              "averaged over seeds"},
             {"rows", std::move(rows)}};
    return out;
}

inline std::string format_double(double v)
{
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

/// n,M_n,q_cap,mean_pred_err,sd_pred_err,theoretical_exponent,fitted_slope plus a summary row.
inline std::string rate_csv(const RateReport& rep)
{
    std::ostringstream os;
    os << "n,M_n,q_cap,mean_pred_err,sd_pred_err,theoretical_exponent,fitted_slope\n";
    for (const RateRow& row : rep.rows) {
        os << row.n << ',' << row.schedule.M << ',' << row.q_cap.str() << ',' << format_double(row.mean_prediction_error)
           << ',' << format_double(row.sd_prediction_error) << ',' << format_double(rep.theoretical_exponent)
           << ",\n";
    }
    os << "summary,,,,," << format_double(rep.theoretical_exponent) << ','
       << (rep.fitted_slope ? format_double(*rep.fitted_slope) : std::string()) << '\n';
    return os.str();
}

/// Malformed dataset CSV; line() is 1-based.
class DatasetError : public std::invalid_argument {
public:
    DatasetError(std::size_t line, const std::string& what)
        : std::invalid_argument("dataset line " + std::to_string(line) + ": " + what), line_(line)
    {
    }
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct Dataset {
    unsigned d = 0;
    std::vector<Sample> samples;
};

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

/// Header x1,...,xd,y then one sample per row.
inline Dataset read_dataset_csv(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DatasetError(1, "empty file");
    ++line_no;
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header.back() != "y") throw DatasetError(1, "header must be x1,...,xd,y");
    for (std::size_t k = 0; k + 1 < header.size(); ++k)
        if (header[k] != "x" + std::to_string(k + 1)) throw DatasetError(1, "header must be x1,...,xd,y");

    Dataset ds;
    ds.d = static_cast<unsigned>(header.size() - 1);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw DatasetError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                            std::to_string(cells.size()));
        Sample s;
        for (std::size_t k = 0; k < cells.size(); ++k) {
            double v = 0;
            std::size_t used = 0;
            try {
                v = std::stod(cells[k], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cells[k].size() || !std::isfinite(v))
                throw DatasetError(line_no, "field " + std::to_string(k + 1) + " is not a number");
            if (k + 1 < cells.size()) {
                if (v < 0 || v > 1) throw DatasetError(line_no, "coordinate outside [0,1]");
                s.x.push_back(v);
            } else {
                s.y = v;
            }
        }
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw DatasetError(line_no, "no samples");
    return ds;
}

inline void write_dataset_csv(std::ostream& out, std::span<const Sample> data, unsigned d)
{
    for (unsigned k = 0; k < d; ++k) out << 'x' << k + 1 << ',';
    out << "y\n";
    for (const Sample& s : data) {
        for (double v : s.x) out << format_double(v) << ',';
        out << format_double(s.y) << '\n';
    }
}

/// x1..xd,f,z on the sup-error grid, for external plotting.
inline void write_grid_csv(std::ostream& out, const NetworkParams& params, const TargetFunction& f, unsigned R)
{
    const unsigned d = params.d();
    const std::vector<double> values = cell_values(params);
    const std::vector<double> axis = sup_grid_axis(params.M(), R);
    for (unsigned k = 0; k < d; ++k) out << 'x' << k + 1 << ',';
    out << "f,z\n";
    std::vector<std::size_t> idx(d, 0);
    Point x(d);
    for (;;) {
        for (unsigned k = 0; k < d; ++k) x[k] = axis[idx[k]];
        for (double v : x) out << format_double(v) << ',';
        out << format_double(f(x)) << ',' << format_double(values[grid_index(x, params.M()).value - 1]) << '\n';
        unsigned k = 0;
        while (k < d && ++idx[k] == axis.size()) idx[k++] = 0;
        if (k == d) break;
    }
}

namespace detail {

/// Collects the literal text of every number in a JSON array so decimals stay exact.
struct RawNumberCollector : nlohmann::json_sax<nlohmann::json> {
    std::vector<std::string> numbers;
    int depth = 0;
    std::string problem;

    bool null() override { return fail("null entry"); }
    bool boolean(bool) override { return fail("boolean entry"); }
    bool number_integer(number_integer_t v) override { return push(std::to_string(v)); }
    bool number_unsigned(number_unsigned_t v) override { return push(std::to_string(v)); }
    bool number_float(number_float_t, const string_t& s) override { return push(s); }
    bool string(string_t& s) override { return push(s); }
    bool binary(binary_t&) override { return fail("binary entry"); }
    bool start_object(std::size_t) override { return fail("object entry"); }
    bool key(string_t&) override { return fail("object entry"); }
    bool end_object() override { return fail("object entry"); }
    bool start_array(std::size_t) override
    {
        if (++depth > 1) return fail("nested array");
        return true;
    }
    bool end_array() override
    {
        --depth;
        return true;
    }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) override
    {
        return fail(ex.what());
    }

private:
    bool push(const std::string& s)
    {
        if (depth != 1) return fail("expected a JSON array");
        numbers.push_back(s);
        return true;
    }
    bool fail(const std::string& why)
    {
        if (problem.empty()) problem = why;
        return false;
    }
};

}  // namespace detail

/// Parses a JSON array of decimals (numbers or numeric strings) into exact rationals.
inline std::vector<Rational> parse_decimal_array(const std::string& text)
{
    detail::RawNumberCollector sax;
    const bool ok = nlohmann::json::sax_parse(text, &sax);
    if (!ok || sax.depth != 0) throw std::invalid_argument("targets: " + (sax.problem.empty() ? "not a JSON array" : sax.problem));
    std::vector<Rational> out;
    out.reserve(sax.numbers.size());
    for (const auto& s : sax.numbers) out.push_back(parse_rational(s));
    return out;
}

}  // namespace intnet
