use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml"))
        .expect("cbindgen.toml is readable");
    match cbindgen::generate_with_config(&crate_dir, config) {
        Ok(bindings) => {
            let out = crate_dir.join("include").join("c4tail.h");
            std::fs::create_dir_all(out.parent().unwrap()).unwrap();
            bindings.write_to_file(out);
        }
        Err(e) => println!("cargo:warning=header generation failed: {e}"),
    }
}
