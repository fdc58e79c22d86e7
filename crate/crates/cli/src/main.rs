fn main() {
    std::process::exit(dfs_sim::main_with(std::env::args_os()));
}
