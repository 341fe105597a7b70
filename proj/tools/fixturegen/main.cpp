#include "fixturegen.hpp"

#include "civicrank/error.hpp"
#include "civicrank/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic headline corpus with offline Wikipedia fixtures"};
    std::string out_dir;
    std::string resources = civicrank::default_resources_dir().string();
    civicrank::fixturegen::Options opt;
    app.add_option("--out", out_dir, "Output directory")->required();
    app.add_option("--resources", resources, "Directory with stopwords.txt and lexicon.tsv");
    app.add_option("--n", opt.n_articles, "Number of articles");
    app.add_option("--seed", opt.seed, "Generator seed");
    CLI11_PARSE(app, argc, argv);

    try {
        const auto s = civicrank::fixturegen::generate(out_dir, resources, opt);
        std::cout << nlohmann::json{{"n_articles", s.n_articles},
                                    {"n_search_fixtures", s.n_search_fixtures},
                                    {"n_pageview_fixtures", s.n_pageview_fixtures},
                                    {"n_burst", s.n_burst}}
                         .dump()
                  << std::endl;
    } catch (const std::exception& e) {
        std::cerr << e.what() << std::endl;
        return civicrank::exit_code_for(e);
    }
}
