#pragma once

namespace trusteval {

// Entry point behind the `trusteval` binary: subcommands synth, train,
// eval, run, serve. Returns the process exit code; nonzero exactly when an
// error was reported.
int run_cli(int argc, char** argv);

} // namespace trusteval
