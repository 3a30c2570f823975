#include <iostream>

#include "ergozeta/cli.hpp"

int main(int argc, char** argv) {
    try {
        const ergozeta::RunConfig config = ergozeta::parse_config(argc, argv);
        return ergozeta::run(config);
    } catch (const ergozeta::HelpRequested& help) {
        std::cout << help.text;
        return 0;
    } catch (const ergozeta::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    }
}
