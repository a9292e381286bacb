#include "commands.hpp"

#include "vgonio/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace vgonio;

int main(int argc, char** argv)
{
    CLI::App app{"vgonio: dihedral angle measurement on 3-D surface meshes"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "OpenMP thread count (0 = runtime default)");

    cli::MeasureOptions measure;
    std::vector<double> point;
    auto* m = app.add_subcommand("measure", "measure angles at listed locations (xyz method)");
    m->add_option("--mesh", measure.mesh, "input mesh (.ply or .obj)")->required();
    m->add_option("--spec", measure.spec, "measurement spec CSV (x,y,z,radius[,lambda][,metric])");
    m->add_option("--point", point, "inline location x y z")->expected(3)->delimiter(',');
    m->add_option("--radius", measure.radius, "patch radius for --point");
    m->add_option("--out", measure.out, "output CSV")->required();
    m->add_option("--colored-out", measure.colored_out, "write the mesh with colored patches (PLY)");
    m->add_option("--lambda", measure.lambda, "default tuning parameter")->capture_default_str();
    m->add_option("--metric", measure.metric, "default distance metric")
        ->check(CLI::IsMember({"geodesic", "euclidean"}))
        ->capture_default_str();
    m->add_option("--knn", measure.knn, "neighbours in the geodesic graph")->capture_default_str();
    m->add_option("--fixed-timestamp", measure.fixed_timestamp, "stamp every record with this ISO-8601 time");
    m->add_flag("--ascii", measure.ascii_ply, "write the colored PLY as ascii");

    cli::SynthOptions synth;
    auto* s = app.add_subcommand("synth", "generate a synthetic mesh with a known dihedral angle");
    s->add_option("shape", synth.shape, "wedge, curved or rugose")
        ->check(CLI::IsMember({"wedge", "curved", "rugose"}))
        ->required();
    s->add_option("--angle", synth.angle, "dihedral angle in degrees, (0, 180]")->capture_default_str();
    s->add_option("-n,--vertices", synth.vertices, "vertices per side")->capture_default_str();
    s->add_option("--half-width", synth.half_width, "half the crease length")->capture_default_str();
    s->add_option("--depth", synth.depth, "extent of each face from the crease")->capture_default_str();
    s->add_option("--noise", synth.noise, "normal-direction noise sigma")->capture_default_str();
    s->add_option("--seed", synth.seed, "random seed")->capture_default_str();
    s->add_option("--arc-radius", synth.arc_radius, "crease arc radius (curved)")->capture_default_str();
    s->add_option("--amplitude", synth.amplitude, "bump amplitude (rugose)")->capture_default_str();
    s->add_option("--out", synth.out, "output PLY")->required();
    s->add_flag("--ascii", synth.ascii_ply, "write ascii PLY");

    std::filesystem::path iov_csv;
    auto* iov = app.add_subcommand("iov", "intra-observer variability of repeated angle measurements");
    iov->add_option("csv", iov_csv, "CSV: break,method,theta,phi,psi or break,method,angle")->required();

    cli::ServeOptions serve;
    auto* sv = app.add_subcommand("serve", "serve the measurement API and UI");
    sv->add_option("--mesh-dir", serve.mesh_dir, "preload meshes from this directory");
    sv->add_option("--bind", serve.bind, "bind address")->capture_default_str();
    sv->add_option("--port", serve.port, "port (0 = any free port)")->capture_default_str();
    sv->add_option("--ui-dir", serve.ui_dir, "static UI bundle to mount at /");
    sv->add_option("--snapshot-dir", serve.snapshot_dir, "where session CSVs are written on shutdown");
    sv->add_option("--knn", serve.knn, "neighbours in the geodesic graph")->capture_default_str();
    sv->add_option("--max-upload-mb", serve.max_upload_mb, "largest accepted upload")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitUsage;
    }
    set_threads(threads);

    if (m->parsed()) {
        if (!point.empty()) measure.point = Vec3{point[0], point[1], point[2]};
        return cli::run_measure(measure, std::cerr);
    }
    if (s->parsed()) return cli::run_synth(synth, std::cerr);
    if (iov->parsed()) return cli::run_iov(iov_csv, std::cout, std::cerr);
    if (sv->parsed()) return cli::run_serve(serve, std::cerr);
    return cli::kExitUsage;
}
