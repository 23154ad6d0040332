#include "gradeloop/analytics/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace gradeloop::analytics {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto at = line.find(sep, start);
        out.push_back(trim(line.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start)));
        if (at == std::string_view::npos) return out;
        start = at + 1;
    }
}

std::vector<std::string_view> lines(std::string_view text) {
    std::vector<std::string_view> out;
    for (auto l : split(text, '\n'))
        if (!l.empty() && l.front() != '#') out.push_back(l);
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::optional<double> number(std::string_view field, std::size_t line_no) {
    if (field.empty() || lower(field) == "nan" || lower(field) == "na") return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v))
        throw AnalyticsError(AnalyticsErrc::InvalidInput,
                             "line " + std::to_string(line_no) + ": not a number: " + std::string(field));
    return v;
}

std::string fmt(double v, int precision = 4) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

std::string fmt_p(double p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, p < 1e-4 ? "%.3e" : "%.5f", p);
    return buf;
}

void histogram(std::string& out, const std::string& title, const std::vector<double>& values, double lo, double hi,
               int bins) {
    out += "# " + title + "\n";
    if (values.empty()) {
        out += "no data\n\n";
        return;
    }
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    const double width = (hi - lo) / bins;
    for (double v : values) {
        int b = static_cast<int>(std::floor((v - lo) / width));
        counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
    }
    out += "bin_low,bin_high,count\n";
    for (int b = 0; b < bins; ++b)
        out += fmt(lo + b * width, 2) + "," + fmt(lo + (b + 1) * width, 2) + "," +
               std::to_string(counts[static_cast<std::size_t>(b)]) + "\n";
    out += "\n";
}

}  // namespace

std::vector<StudyRow> parse_study(std::string_view text) {
    const auto rows = lines(text);
    if (rows.empty()) throw AnalyticsError(AnalyticsErrc::InvalidInput, "study file is empty");
    const auto header = split(rows.front(), ',');
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[lower(header[i])] = i;
    for (auto required : {"pseudonym", "sp", "ba", "we", "em"})
        if (!col.count(required))
            throw AnalyticsError(AnalyticsErrc::InvalidInput, std::string("study file lacks column ") + required);

    std::vector<StudyRow> out;
    for (std::size_t li = 1; li < rows.size(); ++li) {
        const auto f = split(rows[li], ',');
        if (f.size() != header.size())
            throw AnalyticsError(AnalyticsErrc::InvalidInput, "line " + std::to_string(li + 1) + ": wrong field count");
        const auto get = [&](const char* name) -> std::optional<double> {
            auto it = col.find(name);
            return it == col.end() ? std::nullopt : number(f[it->second], li + 1);
        };
        StudyRow r;
        r.pseudonym = std::string(f[col["pseudonym"]]);
        r.sp = get("sp");
        r.ba = get("ba");
        r.we = get("we");
        r.em = get("em");
        r.nuc = get("nuc");
        if (r.nuc) *r.nuc /= 100.0;
        r.nur = get("nur");
        if (auto it = col.find("group"); it != col.end() && !f[it->second].empty()) r.group = std::string(f[it->second]);

        const auto check = [&](const std::optional<double>& v, double lo, double hi, const char* name, bool ordinal) {
            if (!v) return;
            if (*v < lo || *v > hi || (ordinal && *v != std::floor(*v)))
                throw AnalyticsError(AnalyticsErrc::InvalidInput,
                                     "line " + std::to_string(li + 1) + ": " + name + " out of range");
        };
        check(r.sp, 0, 100, "SP", false);
        check(r.ba, 0, 1, "BA", false);
        check(r.we, 0, 3, "WE", true);
        check(r.em, 0, 3, "EM", true);
        check(r.nuc, 0, 1, "NUC", false);
        out.push_back(std::move(r));
    }
    return out;
}

std::map<std::string, std::vector<std::vector<int>>> parse_survey(std::string_view text) {
    const auto rows = lines(text);
    if (rows.empty()) throw AnalyticsError(AnalyticsErrc::InvalidInput, "survey file is empty");
    const auto header = split(rows.front(), ',');
    if (header.size() != 4 || lower(header[0]) != "respondent" || lower(header[1]) != "dimension" ||
        lower(header[2]) != "item" || lower(header[3]) != "value")
        throw AnalyticsError(AnalyticsErrc::InvalidInput, "survey header must be respondent,dimension,item,value");
    std::map<std::string, std::map<std::string, std::vector<int>>> by_dimension;
    for (std::size_t li = 1; li < rows.size(); ++li) {
        const auto f = split(rows[li], ',');
        if (f.size() != 4) throw AnalyticsError(AnalyticsErrc::InvalidInput, "line " + std::to_string(li + 1));
        int v = 0;
        auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), v);
        if (ec != std::errc{} || ptr != f[3].data() + f[3].size())
            throw AnalyticsError(AnalyticsErrc::InvalidInput, "line " + std::to_string(li + 1) + ": bad value");
        by_dimension[std::string(f[1])][std::string(f[0])].push_back(v);
    }
    std::map<std::string, std::vector<std::vector<int>>> out;
    for (auto& [dim, respondents] : by_dimension)
        for (auto& [who, answers] : respondents) out[dim].push_back(std::move(answers));
    return out;
}

void attach_engagement(std::vector<StudyRow>& rows, const std::vector<EngagementSummary>& summaries) {
    std::map<std::string, const EngagementSummary*> index;
    for (const auto& s : summaries) index[s.pseudonym] = &s;
    for (auto& r : rows) {
        auto it = index.find(r.pseudonym);
        if (it == index.end()) continue;
        if (!r.nuc && it->second->nuc) r.nuc = *it->second->nuc / 100.0;
        if (!r.nur && it->second->nur) r.nur = *it->second->nur;
    }
}

std::string emit_report(const ReportInput& in) {
    std::string out;
    out += "# Regression: SP ~ BA + WE + EM + NUC + NUR\n";
    if (in.fit) {
        out += "n_used," + std::to_string(in.fit->n_used) + "\ndf," + std::to_string(in.fit->df) + "\nr_squared," +
               fmt(in.fit->r_squared) + "\n";
        out += "term,estimate,ci_low,ci_high,std_error,t_value,p_value\n";
        for (const auto& c : in.fit->coefficients)
            out += c.term + "," + fmt(c.estimate) + "," + fmt(c.ci_low) + "," + fmt(c.ci_high) + "," +
                   fmt(c.std_error) + "," + fmt(c.t_value, 3) + "," + fmt_p(c.p_value) + "\n";
    } else {
        out += "not computed: " + (in.fit_note.empty() ? std::string("no study data") : in.fit_note) + "\n";
    }
    out += "\n";

    std::vector<double> nuc, nur;
    int excluded = 0;
    for (const auto& s : in.engagement) {
        if (s.nuc) nuc.push_back(*s.nuc);
        if (s.nur) nur.push_back(*s.nur);
        excluded += s.excluded;
    }
    out += "# Engagement\nstudents," + std::to_string(in.engagement.size()) + "\nwith_nuc," +
           std::to_string(nuc.size()) + "\nwith_nur," + std::to_string(nur.size()) + "\nnur_exclusions," +
           std::to_string(excluded) + "\n\n";
    histogram(out, "NUC histogram (percent)", nuc, 0.0, 100.0, 10);
    histogram(out, "NUR histogram (relative learning gain)", nur, -1.0, 1.0, 10);

    out += "# Likert\n";
    if (in.likert.empty()) {
        out += "no data\n";
    } else {
        out += "dimension,responses,mean,mapped_point,label\n";
        for (const auto& d : in.likert)
            out += d.name + "," + std::to_string(d.responses) + "," + fmt(d.mean, 2) + "," +
                   std::to_string(d.mapped_point) + "," + std::string(likert_label(d.mapped_point)) + "\n";
    }
    out += "\n# Kruskal-Wallis (SP by group)\n";
    if (in.kruskal_wallis) {
        const auto& kw = *in.kruskal_wallis;
        std::string groups;
        for (const auto& g : in.kw_groups) groups += (groups.empty() ? "" : ";") + g;
        out += "groups," + groups + "\nn," + std::to_string(kw.n) + "\nH," + fmt(kw.h) + "\ndf," +
               std::to_string(kw.df) + "\np_value," + fmt_p(kw.p_value) + "\nmethod," +
               (kw.exact ? "exact permutation" : "chi-square") + "\n";
    } else {
        out += "no data\n";
    }
    return out;
}

AnalyticsRun run_analytics(std::string_view usage_log, std::string_view study, std::optional<std::string_view> survey,
                           const RegressionOptions& options) {
    AnalyticsRun run;
    auto& in = run.input;
    in.engagement = engagement_summaries(usage::submissions_by_student(usage::parse_log(usage_log)));

    std::vector<StudyRow> rows = parse_study(study);
    attach_engagement(rows, in.engagement);
    try {
        in.fit = fit_ols(rows, options);
    } catch (const AnalyticsError& e) {
        if (e.code() != AnalyticsErrc::InsufficientRows && e.code() != AnalyticsErrc::SingularDesign) throw;
        in.fit_note = e.what();
    }

    std::map<std::string, std::vector<double>> by_group;
    for (const auto& r : rows)
        if (r.group && r.sp) by_group[*r.group].push_back(*r.sp);
    if (by_group.size() >= 2) {
        std::vector<std::vector<double>> groups;
        for (auto& [name, values] : by_group) {
            in.kw_groups.push_back(name);
            groups.push_back(values);
        }
        try {
            in.kruskal_wallis = kruskal_wallis(groups);
        } catch (const AnalyticsError& e) {
            if (e.code() != AnalyticsErrc::DegenerateGroups) throw;
            in.kw_groups.clear();
        }
    }

    if (survey)
        for (const auto& [dim, respondents] : parse_survey(*survey)) in.likert.push_back(likert_summary(dim, respondents));

    run.report = emit_report(in);
    return run;
}

}  // namespace gradeloop::analytics
