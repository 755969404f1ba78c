fn main() {
    toboggan::cli::main()
}
