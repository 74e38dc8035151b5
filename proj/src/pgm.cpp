#include "stik/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "stik/errors.hpp"

namespace stik {

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& in, const std::string& where) {
    std::string tok;
    char c = 0;
    while (in.get(c)) {
        if (c == '#') {
            std::string ignored;
            std::getline(in, ignored);
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            tok.push_back(c);
            break;
        }
    }
    while (in.get(c) && !std::isspace(static_cast<unsigned char>(c))) tok.push_back(c);
    if (tok.empty()) throw InvalidArgument(where + ": truncated PGM header");
    return tok;
}

long header_number(std::istream& in, const std::string& where) {
    const std::string tok = header_token(in, where);
    try {
        std::size_t used = 0;
        const long v = std::stol(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument(where + ": bad PGM header field '" + tok + "'");
    }
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
    const std::string where = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument(where + ": cannot open");
    const std::string magic = header_token(in, where);
    if (magic != "P2" && magic != "P5") throw InvalidArgument(where + ": not a P2/P5 PGM file");

    GrayImage img;
    img.width = header_number(in, where);
    img.height = header_number(in, where);
    img.maxval = static_cast<int>(header_number(in, where));
    if (img.width <= 0 || img.height <= 0) throw InvalidArgument(where + ": bad image size");
    if (img.maxval <= 0 || img.maxval > 65535) throw InvalidArgument(where + ": bad maxval");

    const Index count = img.width * img.height;
    img.pixels.resize(count);
    if (magic == "P2") {
        for (Index i = 0; i < count; ++i) {
            long v = 0;
            if (!(in >> v)) throw InvalidArgument(where + ": truncated pixel data");
            img.pixels[i] = static_cast<double>(v);
        }
    } else {
        const int bytes = img.maxval < 256 ? 1 : 2;
        std::vector<unsigned char> raw(static_cast<std::size_t>(count * bytes));
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
            throw InvalidArgument(where + ": truncated pixel data");
        }
        for (Index i = 0; i < count; ++i) {
            const auto j = static_cast<std::size_t>(i * bytes);
            img.pixels[i] = bytes == 1 ? raw[j] : (raw[j] << 8) | raw[j + 1];
        }
    }
    return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image, bool ascii) {
    if (image.pixels.size() != image.width * image.height) {
        throw InvalidArgument("write_pgm: pixel count does not match the image size");
    }
    if (image.maxval <= 0 || image.maxval > 65535) throw InvalidArgument("write_pgm: bad maxval");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument(path.string() + ": cannot open for writing");
    out << (ascii ? "P2" : "P5") << '\n' << image.width << ' ' << image.height << '\n' << image.maxval << '\n';

    auto level = [&](Index i) {
        const double v = std::round(image.pixels[i]);
        return static_cast<unsigned>(std::clamp(v, 0.0, static_cast<double>(image.maxval)));
    };
    const Index count = image.pixels.size();
    if (ascii) {
        for (Index i = 0; i < count; ++i) {
            out << level(i) << ((i + 1) % image.width == 0 ? '\n' : ' ');
        }
    } else {
        const bool wide = image.maxval > 255;
        std::vector<unsigned char> raw;
        raw.reserve(static_cast<std::size_t>(count * (wide ? 2 : 1)));
        for (Index i = 0; i < count; ++i) {
            const unsigned v = level(i);
            if (wide) raw.push_back(static_cast<unsigned char>(v >> 8));
            raw.push_back(static_cast<unsigned char>(v & 0xff));
        }
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    }
    if (!out) throw InvalidArgument(path.string() + ": write failed");
}

}  // namespace stik
