use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::genetic::rng::{stream, Op};
use crate::snn::Dataset;

/// Indices of a class-stratified subset of `z` samples: `z / C` per class,
/// with the remainder going to the lowest class indices. Which samples of
/// a class are taken is decided by `seed`.
pub fn stratified_indices(dataset: &Dataset, z: usize, seed: u64) -> Result<Vec<usize>> {
    if z == 0 {
        return Err(Error::Argument("encryption set size must be at least 1".into()));
    }
    let classes = dataset.num_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, s) in dataset.samples().iter().enumerate() {
        by_class[s.label].push(i);
    }
    let mut out = Vec::with_capacity(z);
    for (c, members) in by_class.iter_mut().enumerate() {
        let want = z / classes + usize::from(c < z % classes);
        if want > members.len() {
            return Err(Error::Argument(format!(
                "class {c} has {} samples, stratified subset of {z} needs {want}",
                members.len()
            )));
        }
        members.shuffle(&mut stream(seed, 0, c as u32, Op::Sample));
        out.extend_from_slice(&members[..want]);
    }
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{LabeledSample, SpikeTrain};

    fn data(labels: &[usize], classes: usize) -> Dataset {
        let samples = labels
            .iter()
            .map(|&label| LabeledSample { input: SpikeTrain::zeros(1, 1).unwrap(), label })
            .collect();
        Dataset::new(1, 1, classes, samples).unwrap()
    }

    #[test]
    fn remainder_goes_to_low_classes() {
        let d = data(&[0, 1, 2, 0, 1, 2, 0, 1, 2], 3);
        let idx = stratified_indices(&d, 5, 1).unwrap();
        let mut per = [0; 3];
        for i in &idx {
            per[d.samples()[*i].label] += 1;
        }
        assert_eq!(per, [2, 2, 1]);
        assert_eq!(idx, stratified_indices(&d, 5, 1).unwrap());
    }

    #[test]
    fn too_few_members_is_an_error() {
        let d = data(&[0, 1, 1], 2);
        assert!(stratified_indices(&d, 4, 0).is_err());
        assert!(stratified_indices(&d, 0, 0).is_err());
    }
}
