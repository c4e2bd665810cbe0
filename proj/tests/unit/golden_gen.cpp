// SPDX-License-Identifier: Apache-2.0
// Writes the golden test vectors into the directory given as the only
// argument: the container of golden::scene(), its decoded PLY and the
// inspect report of the container.
#include <fstream>
#include <iostream>

#include "elmgs/codec.hpp"
#include "elmgs/io.hpp"
#include "elmgs/pipeline.hpp"
#include "elmgs/ply.hpp"
#include "golden_scene.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: golden_gen <output-dir>\n";
        return 1;
    }
    const std::filesystem::path dir = argv[1];
    const auto container = elmgs::encode(golden::scene(), elmgs::Ordering::Morton);
    elmgs::io::write_file(dir / golden::kContainerFile, container);
    elmgs::ply::save(dir / golden::kPlyFile, elmgs::dequantize_scene(elmgs::decode(container).scene));
    auto report = elmgs::inspect_container(container);
    report["file_bytes"] = container.size();
    std::ofstream(dir / golden::kInspectFile) << report.dump(2) << "\n";
    return 0;
}
