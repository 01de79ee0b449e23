fn main() {
    // CLI wired up once the harness lands.
}
