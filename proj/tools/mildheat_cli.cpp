#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mildheat_cli/run.hpp"

int main(int argc, char** argv) {
	using namespace mildheat;
	CLI::App app{"Experiments for the Dirichlet heat equation u_t = Laplace u + u^p with measure data"};
	std::string config_path, out_dir = "mildheat_out", command;
	std::size_t threads = 0;
	bool verbose = false;
	app.add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
	app.add_option("--out", out_dir, "output directory");
	app.add_option("--command", command, "override run.command")->check(CLI::IsMember(cli::kCommands));
	app.add_option("--threads", threads, "worker threads (overrides run.threads)")->check(CLI::PositiveNumber);
	app.add_flag("--verbose", verbose, "progress on stderr");
	CLI11_PARSE(app, argc, argv);

	cli::RunConfig cfg;
	try {
		std::ifstream in(config_path);
		cfg = cli::parse_config(in);
	} catch (const ConfigError& e) {
		for (const auto& v : e.violations) std::cerr << "config: " << v << '\n';
		return cli::kConfigInvalid;
	}
	if (!command.empty()) cfg.command = command;
	if (threads > 0) cfg.threads = threads;
	return cli::run(cfg, out_dir, std::cerr, verbose);
}
