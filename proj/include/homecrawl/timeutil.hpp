#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

namespace homecrawl {

// Civil-from-days (Hinnant's algorithm); proleptic Gregorian.
inline void civil_from_days(int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t yy = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    y = static_cast<int>(yy + (m <= 2));
}

inline int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

// Format a unix timestamp as RFC 3339 with a fixed UTC offset in minutes,
// e.g. (1540811581, 60) -> "2018-10-29T12:13:01+01:00".
inline std::string rfc3339_format(int64_t unixSec, int offsetMin) {
    int64_t local = unixSec + int64_t(offsetMin) * 60;
    int64_t days = local / 86400;
    int64_t rem = local % 86400;
    if (rem < 0) { rem += 86400; days -= 1; }
    int y, m, d;
    civil_from_days(days, y, m, d);
    int hh = static_cast<int>(rem / 3600);
    int mm = static_cast<int>((rem % 3600) / 60);
    int ss = static_cast<int>(rem % 60);
    char buf[40];
    if (offsetMin == 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d, hh, mm, ss);
    } else {
        int om = offsetMin < 0 ? -offsetMin : offsetMin;
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d%c%02d:%02d", y, m, d, hh,
                      mm, ss, offsetMin < 0 ? '-' : '+', om / 60, om % 60);
    }
    return buf;
}

// Parse RFC 3339 with offset; returns false on malformed input.
inline bool rfc3339_parse(const std::string& s, int64_t& unixSec, int& offsetMin) {
    int y, mo, d, h, mi, se;
    if (s.size() < 20) return false;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d", &y, &mo, &d, &h, &mi, &se) != 6)
        return false;
    size_t p = 19;
    if (p < s.size() && s[p] == '.') {  // fractional seconds, ignored
        ++p;
        while (p < s.size() && s[p] >= '0' && s[p] <= '9') ++p;
    }
    if (p >= s.size()) return false;
    int off = 0;
    if (s[p] == 'Z' || s[p] == 'z') {
        if (p + 1 != s.size()) return false;
    } else if (s[p] == '+' || s[p] == '-') {
        int oh, om;
        if (std::sscanf(s.c_str() + p + 1, "%2d:%2d", &oh, &om) != 2) return false;
        if (p + 6 != s.size()) return false;
        off = oh * 60 + om;
        if (s[p] == '-') off = -off;
    } else {
        return false;
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || se > 60) return false;
    unixSec = days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se - int64_t(off) * 60;
    offsetMin = off;
    return true;
}

inline bool rfc3339_valid(const std::string& s) {
    int64_t u;
    int o;
    return rfc3339_parse(s, u, o);
}

}  // namespace homecrawl
