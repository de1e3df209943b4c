#include "timebound/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "timebound/driver.hpp"
#include "timebound/errors.hpp"
#include "timebound/report.hpp"
#include "timebound/sim.hpp"

namespace timebound::cli {

namespace {

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << text;
}

std::map<int, std::int32_t> lowest_inputs(const Annotations& ann) {
    std::map<int, std::int32_t> inputs;
    for (const auto& [r, range] : ann.inputs) inputs[r] = range.first;
    return inputs;
}

int run_analyze(const std::string& bin, const std::string& annot, const std::string& report_path,
                const std::string& dot_dir, bool wcet_only, bool stack_only, bool trace) {
    ProgramImage image = read_image(bin);
    Annotations ann;
    if (!annot.empty()) ann = read_annotations(annot);

    AnalysisOptions opts;
    if (wcet_only) opts.stack = false;
    if (stack_only) opts.wcet = false;

    AnalysisResult res = analyze_program(image, ann, opts);
    std::string report = emit_report(res);
    if (report_path.empty()) std::cout << report;
    else write_file(report_path, report);

    if (!dot_dir.empty()) {
        std::filesystem::create_directories(dot_dir);
        for (const auto& [name, text] : emit_all_dot(res))
            write_file((std::filesystem::path(dot_dir) / name).string(), text);
    }

    if (trace) {
        Trace t = run(image, res.mcfg, lowest_inputs(ann));
        std::cout << t.to_text();
    }
    return 0;
}

int run_asm(const std::string& source_path, const std::string& out_path) {
    std::ifstream f(source_path);
    if (!f) throw IoError("cannot read " + source_path);
    std::stringstream ss;
    ss << f.rdbuf();
    ProgramImage image = assemble(ss.str());
    write_image(out_path, image);
    std::cout << "wrote " << out_path << " (" << image.code.size() << " bytes, entry "
              << to_hex(image.entry) << ")\n";
    return 0;
}

int run_sim(const std::string& bin, const std::string& annot, bool trace, std::uint64_t budget) {
    ProgramImage image = read_image(bin);
    Annotations ann;
    if (!annot.empty()) ann = read_annotations(annot);
    MachineConfig mcfg = ann.apply(MachineConfig{});
    Trace t = run(image, mcfg, lowest_inputs(ann), budget);
    if (trace) std::cout << t.to_text();
    std::cout << "CYCLES " << t.total_cycles << "\n";
    std::cout << "STACK " << t.max_stack_depth << "\n";
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"WCET and stack bound analyzer for the TWCA toy RISC"};
    app.require_subcommand(1);

    std::string bin, annot, report_path, dot_dir;
    bool wcet_only = false, stack_only = false, trace = false;
    auto* analyze = app.add_subcommand("analyze", "analyze a binary and report bounds");
    analyze->add_option("bin", bin, "TWCA binary")->required();
    analyze->add_option("--annot", annot, "annotation file");
    analyze->add_option("--report", report_path, "write the report here instead of stdout");
    analyze->add_option("--dot", dot_dir, "write per-function DOT graphs into this directory");
    auto* w = analyze->add_flag("--wcet-only", wcet_only, "skip the stack analysis");
    analyze->add_flag("--stack-only", stack_only, "skip the WCET analysis")->excludes(w);
    analyze->add_flag("--trace", trace, "run the simulator once and dump its trace");

    std::string asm_in, asm_out = "out.bin";
    auto* asmc = app.add_subcommand("asm", "assemble a source file into a TWCA binary");
    asmc->add_option("source", asm_in, "assembly source")->required();
    asmc->add_option("-o,--output", asm_out, "output path");

    std::string sim_bin, sim_annot;
    bool sim_trace = false;
    std::uint64_t budget = kDefaultCycleBudget;
    auto* simc = app.add_subcommand("sim", "run the reference simulator");
    simc->add_option("bin", sim_bin, "TWCA binary")->required();
    simc->add_option("--annot", sim_annot, "annotation file (machine config and inputs)");
    simc->add_flag("--trace", sim_trace, "dump the execution trace");
    simc->add_option("--budget", budget, "cycle budget");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand("analyze"))
            return run_analyze(bin, annot, report_path, dot_dir, wcet_only, stack_only, trace);
        if (app.got_subcommand("asm")) return run_asm(asm_in, asm_out);
        if (app.got_subcommand("sim")) return run_sim(sim_bin, sim_annot, sim_trace, budget);
        throw UsageError("no subcommand");
    } catch (const AnalysisError& e) {
        std::cerr << "analysis refused: " << e.what() << "\n";
        return 2;
    } catch (const TrapError& e) {
        std::cerr << "trap: " << e.what() << "\n";
        return 1;
    } catch (const AsmError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace timebound::cli
