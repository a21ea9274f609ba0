fn main() {
    provkit::cli::main()
}
