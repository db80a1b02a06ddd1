// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

// cpt-render: single-process render of a scene to PNG or PFM. Handy for
// references and for eyeballing scenes.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cpt/cluster/image_codec.hpp"
#include "cpt/dist/distribution.hpp"
#include "cpt/render/scene_io.hpp"
#include "cpt/render/scene_update.hpp"

int main(int argc, char **argv)
{
  CLI::App app{"Single-process scene render"};
  std::string scene_file, out;
  std::uint32_t width = 320, height = 180, spp = 16, max_depth = cpt::kDefaultMaxDepth;
  std::uint64_t seed = 1, frame = 0;
  unsigned threads = 0;
  app.add_option("--scene", scene_file)->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "output .png or .pfm")->required();
  app.add_option("--width", width)->capture_default_str();
  app.add_option("--height", height)->capture_default_str();
  app.add_option("--spp", spp)->capture_default_str();
  app.add_option("--max-depth", max_depth)->capture_default_str();
  app.add_option("--seed", seed)->capture_default_str();
  app.add_option("--frame", frame, "animation frame")->capture_default_str();
  app.add_option("--threads", threads);
  CLI11_PARSE(app, argc, argv);

  try {
    cpt::Scene scene = cpt::load_scene(scene_file);
    if (frame > 0)
      cpt::apply_scene_update(scene, cpt::make_animation_update(scene, frame));
    cpt::PlanConfig pc;
    pc.participants = 1;
    pc.dims = {width, height};
    pc.per_node_spp = spp;
    pc.seed = seed;
    pc.max_depth = max_depth;
    const cpt::WorkPlan plan = cpt::plan(pc);
    cpt::RenderCounters counters;
    const cpt::RadianceBuffer rb =
        cpt::render_assignment(scene, scene.camera, plan.assignments[0], threads, frame, &counters);
    if (out.size() > 4 && out.substr(out.size() - 4) == ".pfm") {
      cpt::write_pfm(out, rb);
    } else {
      const auto png = cpt::encode_png(cpt::tone_map(rb));
      std::ofstream(out, std::ios::binary)
          .write(reinterpret_cast<const char *>(png.data()), std::streamsize(png.size()));
    }
    std::cerr << "rendered " << counters.paths.load() << " paths, "
              << counters.nonfinite_samples.load() << " non-finite samples\n";
    return 0;
  } catch (const std::exception &e) {
    std::cerr << "render: " << e.what() << '\n';
    return 1;
  }
}
