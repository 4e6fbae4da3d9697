#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "bon/demo_corpus.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generate a deterministic English/French demo pair file"};
    size_t count = 3400;
    uint64_t seed = 7;
    std::string out;
    bool noise = true;
    app.add_option("--count", count, "number of clean pair lines")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--out", out, "output path")->required();
    app.add_flag("--noise,!--no-noise", noise, "interleave malformed and duplicate lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        bon::write_demo_pairs(out, count, seed, noise);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
