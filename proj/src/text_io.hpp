#pragma once

// Shared helpers for the line-oriented artifact formats (codebooks, models).

#include <charconv>
#include <cstdio>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "mimofb/error.hpp"

namespace mimofb::detail {

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Shortest text that still parses back to exactly v.
inline std::string format_shortest(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Pulls whitespace-separated tokens out of a stream, turning any shortfall
// or malformed number into CorruptArtifact.
class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string word(const char* what)
    {
        std::string tok;
        if (!(in_ >> tok))
            fail(ErrorCode::CorruptArtifact, std::string("unexpected end of file reading ") + what);
        return tok;
    }

    void expect(const std::string& literal)
    {
        const std::string tok = word(literal.c_str());
        if (tok != literal)
            fail(ErrorCode::CorruptArtifact, "expected '" + literal + "' but found '" + tok + "'");
    }

    double real(const char* what)
    {
        const std::string tok = word(what);
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size())
            fail(ErrorCode::CorruptArtifact, std::string("malformed number for ") + what + ": '" + tok + "'");
        return v;
    }

    std::size_t count(const char* what)
    {
        const std::string tok = word(what);
        std::size_t v = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || ptr != tok.data() + tok.size())
            fail(ErrorCode::CorruptArtifact, std::string("malformed count for ") + what + ": '" + tok + "'");
        return v;
    }

    // "key value" pair with a fixed key.
    std::size_t keyed_count(const std::string& key)
    {
        expect(key);
        return count(key.c_str());
    }

private:
    std::istream& in_;
};

} // namespace mimofb::detail
