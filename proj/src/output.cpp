#include "cpsrl/output.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cpsrl {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    std::array<char, 64> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf.data(), end);
}

double parse_double(const std::string& text) {
    if (text == "nan") return std::nan("");
    double value = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size())
        throw std::runtime_error("not a number: '" + text + "'");
    return value;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path,
                                                const std::string& schema,
                                                const std::string& header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != schema)
        throw std::runtime_error(path.string() + ": expected schema line '" + schema + "'");
    if (!std::getline(in, line) || line != header)
        throw std::runtime_error(path.string() + ": expected header '" + header + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream stream(line);
        std::string cell;
        while (std::getline(stream, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

constexpr const char* kCurveHeader = "t,cumulative_regret,k,gamma";
constexpr const char* kAggregateHeader = "t,mean,stderr,n";
constexpr const char* kEpisodeHeader = "k,t_k,len,delta_k,delta_tilde_k,gamma";
constexpr const char* kStepHeader = "t,s,a,r,regret";

}  // namespace

void write_curve_csv(const std::filesystem::path& path, const RunLog& log) {
    auto out = open_out(path);
    out << kCurveSchema << '\n' << kCurveHeader << '\n';
    for (const CurvePoint& p : log.curve)
        out << p.t << ',' << format_double(p.cumulative_regret) << ',' << p.k << ','
            << format_double(p.gamma) << '\n';
}

std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path) {
    std::vector<CurvePoint> points;
    for (const auto& row : read_rows(path, kCurveSchema, kCurveHeader)) {
        if (row.size() != 4) throw std::runtime_error(path.string() + ": bad row");
        points.push_back({std::stoull(row[0]), parse_double(row[1]), std::stoull(row[2]),
                          parse_double(row[3])});
    }
    return points;
}

void write_episode_csv(const std::filesystem::path& path, const RunLog& log) {
    auto out = open_out(path);
    out << kEpisodeSchema << '\n' << kEpisodeHeader << '\n';
    for (const EpisodeRecord& e : log.episodes)
        out << e.k << ',' << e.t_k << ',' << e.length << ',' << format_double(e.delta) << ','
            << format_double(e.delta_tilde) << ',' << format_double(e.gamma) << '\n';
}

void write_step_csv(const std::filesystem::path& path, const RunLog& log) {
    auto out = open_out(path);
    out << kStepSchema << '\n' << kStepHeader << '\n';
    for (const StepRecord& s : log.steps)
        out << s.t << ',' << s.s << ',' << s.a << ',' << format_double(s.reward) << ','
            << format_double(s.regret) << '\n';
}

void write_aggregate_csv(const std::filesystem::path& path,
                         const std::vector<AggregatePoint>& points) {
    auto out = open_out(path);
    out << kAggregateSchema << '\n' << kAggregateHeader << '\n';
    for (const AggregatePoint& p : points)
        out << p.t << ',' << format_double(p.mean) << ',' << format_double(p.std_error) << ','
            << p.n << '\n';
}

std::vector<AggregatePoint> read_aggregate_csv(const std::filesystem::path& path) {
    std::vector<AggregatePoint> points;
    for (const auto& row : read_rows(path, kAggregateSchema, kAggregateHeader)) {
        if (row.size() != 4) throw std::runtime_error(path.string() + ": bad row");
        points.push_back(
            {std::stoull(row[0]), parse_double(row[1]), parse_double(row[2]), std::stoull(row[3])});
    }
    return points;
}

std::string render_regret_svg(const std::vector<PlotSeries>& series, const std::string& title) {
    constexpr double kWidth = 720, kHeight = 440;
    constexpr double kLeft = 80, kRight = 160, kTop = 40, kBottom = 60;
    constexpr std::array<const char*, 6> kColors{"#1f77b4", "#d62728", "#2ca02c",
                                                 "#ff7f0e", "#9467bd", "#8c564b"};
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    double t_max = 1.0, y_min = 0.0, y_max = 1e-12;
    for (const auto& s : series) {
        for (const auto& p : s.points) {
            t_max = std::max(t_max, static_cast<double>(p.t));
            y_max = std::max(y_max, p.mean + p.std_error);
            y_min = std::min(y_min, p.mean - p.std_error);
        }
    }
    auto x_of = [&](double t) { return kLeft + plot_w * t / t_max; };
    auto y_of = [&](double y) { return kTop + plot_h * (1.0 - (y - y_min) / (y_max - y_min)); };

    std::ostringstream svg;
    svg.precision(6);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-size=\"14\">" << title << "</text>\n";
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
        << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";

    constexpr int kTicks = 5;
    for (int i = 0; i <= kTicks; ++i) {
        const double t = t_max * i / kTicks;
        const double y = y_min + (y_max - y_min) * i / kTicks;
        svg << "<text x=\"" << x_of(t) << "\" y=\"" << kTop + plot_h + 18
            << "\" text-anchor=\"middle\">" << t << "</text>\n";
        svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << y_of(y) + 4
            << "\" text-anchor=\"end\">" << y << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 16
        << "\" text-anchor=\"middle\">t</text>\n";
    svg << "<text transform=\"translate(20," << kTop + plot_h / 2
        << ") rotate(-90)\" text-anchor=\"middle\">cumulative regret</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kColors[i % kColors.size()];
        const auto& pts = series[i].points;
        if (pts.empty()) continue;
        svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (const auto& p : pts) svg << x_of(p.t) << ',' << y_of(p.mean + p.std_error) << ' ';
        for (auto it = pts.rbegin(); it != pts.rend(); ++it)
            svg << x_of(it->t) << ',' << y_of(it->mean - it->std_error) << ' ';
        svg << "\"/>\n";
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& p : pts) svg << x_of(p.t) << ',' << y_of(p.mean) << ' ';
        svg << "\"/>\n";
        const double ly = kTop + 16 + 18 * static_cast<double>(i);
        svg << "<line x1=\"" << kLeft + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\""
            << kLeft + plot_w + 36 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kLeft + plot_w + 42 << "\" y=\"" << ly + 4 << "\">"
            << series[i].label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace cpsrl
