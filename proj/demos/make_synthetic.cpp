// Writes a synthetic wide-format price file for trying the pipeline:
//   make_synthetic <out.csv> [seed]

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "synthetic.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: make_synthetic <out.csv> [seed]\n";
        return 2;
    }
    comove::synthetic::PanelSpec shape;
    if (argc > 2) shape.seed = std::strtoull(argv[2], nullptr, 10);
    std::ofstream out(argv[1]);
    if (!out) {
        std::cerr << "cannot write " << argv[1] << '\n';
        return 1;
    }
    comove::synthetic::write_wide_csv(out, comove::synthetic::make_panel(shape));
    return 0;
}
